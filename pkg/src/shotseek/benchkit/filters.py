"""Model-based content filters for the Color, Style and Audio tasks."""

from __future__ import annotations

import logging
import re
from pathlib import Path

from ..backends import AudioPart, ChatBackend, ChatRequest, ImagePart, TextPart
from ..errors import InvalidValue
from ..model import ConstraintKind
from ..prompts import load

log = logging.getLogger(__name__)

REJECTED = "Rejected"
CONSENSUS_RETRIES = 3

# normalized answer -> canonical label
LABELS = {
    ConstraintKind.COLOR: {
        "warm": "Warm", "warmtone": "Warm",
        "cold": "Cold", "coldtone": "Cold", "cool": "Cold", "cooltone": "Cold",
        "neutral": "Neutral", "neutraltone": "Neutral",
    },
    ConstraintKind.STYLE: {
        "real": "Real", "liveaction": "Real",
        "2danimation": "2D Animation", "2d": "2D Animation",
        "3danimation": "3D Animation", "3d": "3D Animation",
        "graphic": "Graphic", "graphics": "Graphic",
    },
    ConstraintKind.AUDIO: {
        "humanvoice": "HumanVoice", "voice": "HumanVoice",
        "backgroundmusic": "BackgroundMusic", "music": "BackgroundMusic",
        "ambientsound": "AmbientSound", "ambient": "AmbientSound",
    },
}  # fmt: skip

PROMPTS = {
    ConstraintKind.COLOR: "filter_color.v1.txt",
    ConstraintKind.STYLE: "filter_style.v1.txt",
    ConstraintKind.AUDIO: "filter_audio.v1.txt",
}


def normalize_label(kind: ConstraintKind, answer: str) -> str | None:
    key = re.sub(r"[^a-z0-9]", "", answer.strip().splitlines()[0].lower()) if answer.strip() else ""
    return LABELS[kind].get(key)


def _ask(chat: ChatBackend, kind: ConstraintKind, media: Path, model: str) -> str | None:
    part = AudioPart(str(media)) if kind is ConstraintKind.AUDIO else ImagePart(str(media))
    req = ChatRequest((TextPart(load(PROMPTS[kind])), part), model=model, temperature=0.0)
    return normalize_label(kind, chat.chat(req))


def consensus_classify(
    frame: "str | Path",
    kind: "ConstraintKind | str",
    model_a: ChatBackend,
    model_b: ChatBackend,
    model_ids: tuple[str, str] = ("filter-a", "filter-b"),
    retries: int = CONSENSUS_RETRIES,
) -> str:
    """Label a frame only if two independent models agree.

    Disagreement or an unrecognized answer triggers another round, up to
    ``retries`` extra rounds. Returns ``REJECTED`` when no round agrees.
    """
    kind = ConstraintKind.parse(kind)
    if kind not in (ConstraintKind.COLOR, ConstraintKind.STYLE):
        raise InvalidValue("consensus filtering applies to Color and Style only")
    for round_no in range(1, retries + 2):
        a = _ask(model_a, kind, Path(frame), model_ids[0])
        b = _ask(model_b, kind, Path(frame), model_ids[1])
        if a is not None and a == b:
            return a
        log.debug("round %d: %r vs %r", round_no, a, b)
    return REJECTED


def classify_audio(clip: "str | Path", model: ChatBackend, model_id: str = "filter-audio") -> str:
    label = _ask(model, ConstraintKind.AUDIO, Path(clip), model_id)
    return label if label is not None else REJECTED
