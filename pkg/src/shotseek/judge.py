"""Match verification and judge-agreement tooling."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .backends import ChatBackend, ChatRequest, EmbeddingBackend, EmbeddingRequest, ImagePart, TextPart, file_digest
from .errors import InvalidValue, LengthMismatch, UnparseableVerdict
from .model import ShotQuery, Verdict
from .prompts import load

log = logging.getLogger(__name__)

PROMPT_FILE = "judge.v1.txt"
CLIP_THRESHOLD = 0.7
DEFAULT_REASKS = 2

IDENTITY_HINT = "Note: the two image files are byte-identical."

_TRUE = {"TRUE", "YES"}
_FALSE = {"FALSE", "NO"}


def build_judge_request(
    q: ShotQuery, gt_frame: "str | Path", selected_frame: "str | Path", model: str = "judge"
) -> ChatRequest:
    hint = IDENTITY_HINT if file_digest(gt_frame) == file_digest(selected_frame) else ""
    text = load(PROMPT_FILE).replace("{DESCRIPTION}", q.full_text).replace("{IDENTITY_HINT}", hint)
    parts = (TextPart(text), ImagePart(str(gt_frame)), ImagePart(str(selected_frame)))
    return ChatRequest(parts, model=model, temperature=0.0)


def parse_verdict(raw: str) -> tuple[bool, str]:
    """First word decides; the rest of the reply is kept as rationale."""
    stripped = raw.strip()
    m = re.match(r"[\W_]*([A-Za-z]+)", stripped)
    if not m:
        raise UnparseableVerdict(f"no verdict token in {raw[:80]!r}")
    token = m.group(1).upper()
    rationale = stripped[m.end() :].lstrip(" *_.:,-\n\t")
    if token in _TRUE:
        return True, rationale
    if token in _FALSE:
        return False, rationale
    raise UnparseableVerdict(f"first token {token!r} is not TRUE/FALSE")


def verify(
    q: ShotQuery,
    gt_frame: "str | Path",
    selected_frame: "str | Path",
    chat: ChatBackend,
    model: str = "judge",
    reasks: int = DEFAULT_REASKS,
) -> Verdict:
    for p in (gt_frame, selected_frame):
        if not Path(p).is_file():
            raise InvalidValue(f"missing image {p}")
    req = build_judge_request(q, gt_frame, selected_frame, model)
    for attempt in range(reasks + 1):
        raw = chat.chat(req)
        try:
            matched, rationale = parse_verdict(raw)
        except UnparseableVerdict:
            if attempt == reasks:
                raise
            reminder = TextPart("Your reply must start with the single word TRUE or FALSE.")
            req = ChatRequest(req.user_parts[:3] + (reminder,), req.model, req.temperature, req.system)
            continue
        return Verdict(matched, model, rationale)
    raise AssertionError("unreachable")


def cosine(a: Sequence[float], b: Sequence[float]) -> float:
    va = np.asarray(a, dtype=np.float64)
    vb = np.asarray(b, dtype=np.float64)
    if va.shape != vb.shape or va.ndim != 1:
        raise InvalidValue("vectors must be 1-D and equally long")
    denom = np.sqrt(va @ va) * np.sqrt(vb @ vb)
    if denom == 0:
        raise InvalidValue("cosine of a zero vector is undefined")
    return float((va @ vb) / denom)


def clip_score(
    gt_frame: "str | Path",
    selected_frame: "str | Path",
    embed: EmbeddingBackend,
    model: str = "clip",
    description: Optional[str] = None,
) -> float:
    """Image-image cosine, or text-image when ``description`` is given."""
    sel = embed.embed(EmbeddingRequest(ImagePart(str(selected_frame)), model))
    if description is not None:
        ref = embed.embed(EmbeddingRequest(TextPart(description), model))
    else:
        ref = embed.embed(EmbeddingRequest(ImagePart(str(gt_frame)), model))
    return cosine(ref, sel)


def clip_verdict(
    gt_frame: "str | Path",
    selected_frame: "str | Path",
    embed: EmbeddingBackend,
    threshold: float = CLIP_THRESHOLD,
    model: str = "clip",
    description: Optional[str] = None,
) -> bool:
    if not -1.0 <= threshold <= 1.0:
        raise InvalidValue("threshold must lie in [-1, 1]")
    return clip_score(gt_frame, selected_frame, embed, model, description) >= threshold


@dataclass(frozen=True)
class ConfusionMatrix:
    """2x2 counts of predictions against reference labels; positive means matched."""

    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise InvalidValue("counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def agreement(self) -> float:
        return (self.tp + self.tn) / self.total if self.total else float("nan")

    @property
    def cohen_kappa(self) -> float:
        n = self.total
        if n == 0:
            return float("nan")
        po = (self.tp + self.tn) / n
        pe = ((self.tp + self.fp) * (self.tp + self.fn) + (self.fn + self.tn) * (self.fp + self.tn)) / (n * n)
        return 1.0 if pe == 1 else (po - pe) / (1 - pe)

    def transposed(self) -> "ConfusionMatrix":
        return ConfusionMatrix(self.tp, self.fn, self.fp, self.tn)

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}


def confusion(preds: Sequence[bool], human: Sequence[bool]) -> ConfusionMatrix:
    if len(preds) != len(human):
        raise LengthMismatch(f"{len(preds)} predictions vs {len(human)} reference labels")
    tp = fp = fn = tn = 0
    for p, h in zip(preds, human):
        if p and h:
            tp += 1
        elif p:
            fp += 1
        elif h:
            fn += 1
        else:
            tn += 1
    return ConfusionMatrix(tp, fp, fn, tn)
