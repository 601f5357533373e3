"""Frame grounding: show a model the sampled frames and parse its single-frame pick."""

from __future__ import annotations

import json
import logging
import re
from enum import Enum
from typing import Optional

from .backends import AudioPart, Backends, ChatBackend, ChatRequest, ImagePart, TextPart
from .errors import BackendError, ContextOverflow, MediaToolFailure, ParseError, ParseErrorKind
from .model import ConstraintKind, FrameGrid, LocalizationOutcome, ShotQuery, VideoAsset
from .prompts import load
from .sampler import SamplingPolicy, sample, timestamp_of

log = logging.getLogger(__name__)


class ParseMode(str, Enum):
    STRICT = "strict"
    PERMISSIVE = "permissive"


PROMPTS = {
    ParseMode.STRICT: "grounding.v1.txt",
    ParseMode.PERMISSIVE: "grounding_permissive.v1.txt",
}

DEFAULT_REASKS = 2
MAX_HALVINGS = 2

_TOOL_RE = re.compile(r"<tool_call>(.*?)</tool_call>", re.S)
_NA_RE = re.compile(r"^\W*n\s*/?\s*a\W*$", re.I)
_LOOSE_RE = re.compile(r"""["']?frame_id["']?\s*:\s*(.+?)\s*[,}]""", re.S)

REMINDER = (
    "Your previous answer was rejected ({error}). Reply with exactly "
    '<tool_call>{{"frame_id": <integer between 0 and {last}>}}</tool_call>.'
)


def _fmt_seconds(x: float) -> str:
    return f"{x:.3f}".rstrip("0").rstrip(".")


def build_grounding_prompt(
    q: ShotQuery,
    grid: FrameGrid,
    model: str = "localizer",
    mode: ParseMode = ParseMode.STRICT,
    temperature: float = 0.0,
) -> ChatRequest:
    text = (
        load(PROMPTS[ParseMode(mode)])
        .replace("$VIDEO_DURATION$", _fmt_seconds(grid.duration_s))
        .replace("$NUM_FRAMES$", str(grid.num_frames))
        .replace("$en_memory_data$", q.full_text)
    )
    parts: list = [TextPart(text)]
    parts.extend(ImagePart(f.path) for f in grid.frames)
    if grid.audio_path:
        parts.append(AudioPart(grid.audio_path))
    return ChatRequest(tuple(parts), model=model, temperature=temperature)


def _is_na(value) -> bool:
    return value is None or (isinstance(value, str) and bool(_NA_RE.match(value)))


def _interpret(value, n: int, mode: ParseMode) -> Optional[int]:
    if _is_na(value):
        if mode is ParseMode.PERMISSIVE:
            return None
        raise ParseError(ParseErrorKind.FORBIDDEN_NA, f"got {value!r}")
    if isinstance(value, bool):
        raise ParseError(ParseErrorKind.NOT_INTEGER, f"got {value!r}")
    if isinstance(value, str) and re.fullmatch(r"\s*-?\d+\s*", value):
        value = int(value)
    if not isinstance(value, int):
        raise ParseError(ParseErrorKind.NOT_INTEGER, f"got {value!r}")
    if not 0 <= value <= n - 1:
        raise ParseError(ParseErrorKind.OUT_OF_RANGE, f"{value} not in [0, {n - 1}]")
    return value


def parse_frame_choice(raw: str, n: int, mode: "ParseMode | str" = ParseMode.STRICT) -> Optional[int]:
    """Return the chosen frame index, or None when a permissive answer says no match."""
    mode = ParseMode(mode)
    blocks = _TOOL_RE.findall(raw)
    if not blocks:
        if _NA_RE.match(raw.strip() or "x"):
            return _interpret("N/A", n, mode)
        raise ParseError(ParseErrorKind.NO_TOOL_CALL)
    if len(blocks) > 1:
        raise ParseError(ParseErrorKind.NOT_INTEGER, "multiple tool calls")
    body = blocks[0].strip()
    try:
        obj = json.loads(body)
    except json.JSONDecodeError:
        m = _LOOSE_RE.search(body)
        if m is None:
            if _NA_RE.match(body or "x"):
                return _interpret("N/A", n, mode)
            raise ParseError(ParseErrorKind.NOT_INTEGER, f"unreadable tool call {body[:80]!r}")
        token = m.group(1).strip().strip("\"'")
        value: object = None if token.lower() == "null" else token
        return _interpret(value, n, mode)
    if not isinstance(obj, dict) or "frame_id" not in obj:
        raise ParseError(ParseErrorKind.NOT_INTEGER, "frame_id missing")
    return _interpret(obj["frame_id"], n, mode)


def _ask(chat: ChatBackend, req: ChatRequest, n: int, mode: ParseMode, reasks: int) -> tuple[Optional[int], str]:
    attempt_req = req
    for attempt in range(reasks + 1):
        raw = chat.chat(attempt_req)
        try:
            return parse_frame_choice(raw, n, mode), raw
        except ParseError as exc:
            if attempt == reasks:
                exc.raw = raw
                raise
            reminder = TextPart(REMINDER.format(error=exc, last=n - 1))
            attempt_req = ChatRequest(req.user_parts + (reminder,), req.model, req.temperature, req.system)
    raise AssertionError("unreachable")


def _no_match(candidate: VideoAsset, n: int, raw: str, error: Optional[str], notes) -> LocalizationOutcome:
    return LocalizationOutcome(candidate, None, n, None, raw, None, error, tuple(notes))


def localize(
    q: ShotQuery,
    candidate: VideoAsset,
    policy: SamplingPolicy,
    backends: Backends,
    mode: "ParseMode | str" = ParseMode.STRICT,
    model: str = "localizer",
    reasks: int = DEFAULT_REASKS,
    audio: Optional[bool] = None,
    temperature: float = 0.0,
) -> LocalizationOutcome:
    """Sample, prompt, parse. Failures become a no-match outcome carrying the error."""
    mode = ParseMode(mode)
    with_audio = (q.constraint_kind is ConstraintKind.AUDIO) if audio is None else audio
    notes: list[str] = []
    forced: Optional[int] = None
    n = 0
    for _ in range(MAX_HALVINGS + 1):
        try:
            grid = sample(candidate, policy, with_audio, backends.media, num_frames=forced)
        except MediaToolFailure as exc:
            return _no_match(candidate, forced or 0, "", f"sampling failed: {exc}", notes)
        n = grid.num_frames
        req = build_grounding_prompt(q, grid, model, mode, temperature)
        try:
            choice, raw = _ask(backends.chat, req, n, mode, reasks)
        except ContextOverflow:
            forced = n // 2
            notes.append(f"context overflow at {n} frames; retrying with {forced}")
            log.info("%s: %s", candidate.url, notes[-1])
            if forced < 1:
                break
            continue
        except ParseError as exc:
            return _no_match(candidate, n, getattr(exc, "raw", ""), f"parse failed: {exc}", notes)
        except BackendError as exc:
            return _no_match(candidate, n, "", f"{type(exc).__name__}: {exc}", notes)
        if choice is None:
            return _no_match(candidate, n, raw, None, notes)
        return LocalizationOutcome(
            candidate,
            choice,
            n,
            timestamp_of(choice, n, candidate.duration_s),
            raw,
            grid.frames[choice].path,
            None,
            tuple(notes),
        )
    return _no_match(candidate, n, "", "context overflow persisted after frame reduction", notes)
