"""Domain types shared by every stage. Pure values, no I/O."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Mapping, Optional

from .errors import InvalidValue, MissingField


class ConstraintKind(str, Enum):
    SHOT = "Shot"
    TEMPORAL = "Temporal"
    COLOR = "Color"
    STYLE = "Style"
    AUDIO = "Audio"
    RESOLUTION = "Resolution"

    @classmethod
    def parse(cls, value: "str | ConstraintKind") -> "ConstraintKind":
        if isinstance(value, cls):
            return value
        for kind in cls:
            if kind.value.lower() == str(value).strip().lower():
                return kind
        raise InvalidValue(f"unknown constraint kind {value!r}")


# Display order of the results table.
TASK_ORDER = (
    ConstraintKind.SHOT,
    ConstraintKind.TEMPORAL,
    ConstraintKind.COLOR,
    ConstraintKind.STYLE,
    ConstraintKind.RESOLUTION,
    ConstraintKind.AUDIO,
)

TOPICS = (
    "Variety Shows",
    "Animation",
    "Dance",
    "Tech",
    "Food",
    "Automotive",
    "Sports",
    "Lifestyle Vlogs",
    "Film",
    "TV Series",
    "Documentary",
    "Gaming",
    "Music",
    "Knowledge",
    "Fashion",
    "Animals",
    "Visual Arts",
    "Tourism",
    "Fitness",
    "Parenting",
)

RESOLUTIONS = ("1080P", "720P")
LANGUAGES = ("en", "ch")


@dataclass(frozen=True)
class ShotQuery:
    description: str
    constraint_kind: ConstraintKind = ConstraintKind.SHOT
    constraint_text: Optional[str] = None
    language: str = "en"

    def __post_init__(self):
        if not self.description or not self.description.strip():
            raise InvalidValue("description must be non-empty")
        if self.language not in LANGUAGES:
            raise InvalidValue(f"language must be one of {LANGUAGES}")
        has_text = bool(self.constraint_text and self.constraint_text.strip())
        if has_text != (self.constraint_kind is not ConstraintKind.SHOT):
            raise InvalidValue("constraint_text is required iff constraint_kind is not Shot")

    @property
    def full_text(self) -> str:
        """Description followed by the constraint text, as shown to models."""
        if self.constraint_text:
            return f"{self.description} {self.constraint_text}"
        return self.description

    def to_dict(self) -> dict:
        return {
            "description": self.description,
            "constraint_kind": self.constraint_kind.value,
            "constraint_text": self.constraint_text,
            "language": self.language,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ShotQuery":
        return cls(
            description=d["description"],
            constraint_kind=ConstraintKind.parse(d.get("constraint_kind", "Shot")),
            constraint_text=d.get("constraint_text"),
            language=d.get("language", "en"),
        )


@dataclass(frozen=True)
class AssetPaths:
    target_frame: str
    preceding_frames: tuple[str, ...] = ()
    following_frames: tuple[str, ...] = ()
    audio_clip: Optional[str] = None
    metadata: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "target_frame": self.target_frame,
            "preceding_frames": list(self.preceding_frames),
            "following_frames": list(self.following_frames),
            "audio_clip": self.audio_clip,
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "AssetPaths":
        return cls(
            target_frame=d["target_frame"],
            preceding_frames=tuple(d.get("preceding_frames") or ()),
            following_frames=tuple(d.get("following_frames") or ()),
            audio_clip=d.get("audio_clip"),
            metadata=d.get("metadata"),
        )


_BILINGUAL = ("segment", "context", "color", "style", "audio")


@dataclass(frozen=True)
class BenchmarkSample:
    """One benchmark record. Field names follow the on-disk JSON schema.

    Only structural invariants are enforced here; the description length
    band is a validation concern (see ``benchkit.validate``).
    """

    id: str
    video_link: str
    video_source: str
    category: str
    timestamp: str
    resolution: str
    segment_description_ch: Optional[str] = None
    segment_description_en: Optional[str] = None
    context_description_ch: Optional[tuple[str, str]] = None
    context_description_en: Optional[tuple[str, str]] = None
    color_description_ch: Optional[str] = None
    color_description_en: Optional[str] = None
    style_description_ch: Optional[str] = None
    style_description_en: Optional[str] = None
    audio_description_ch: Optional[str] = None
    audio_description_en: Optional[str] = None
    asset_paths: Optional[AssetPaths] = None

    def __post_init__(self):
        if self.category not in TOPICS:
            raise InvalidValue(f"category {self.category!r} is not a known topic")
        if self.resolution not in RESOLUTIONS:
            raise InvalidValue(f"resolution must be one of {RESOLUTIONS}")
        for lang in LANGUAGES:
            ctx = getattr(self, f"context_description_{lang}")
            if ctx is not None and len(ctx) != 2:
                raise InvalidValue(f"context_description_{lang} must have exactly 2 elements")

    def field_for(self, name: str, language: str) -> str:
        value = getattr(self, f"{name}_description_{language}")
        if value is None or (isinstance(value, str) and not value.strip()):
            raise MissingField(f"{name}_description_{language}")
        return value

    def to_dict(self) -> dict:
        d: dict[str, Any] = {
            "id": self.id,
            "video_link": self.video_link,
            "video_source": self.video_source,
            "category": self.category,
            "timestamp": self.timestamp,
            "resolution": self.resolution,
        }
        for name in _BILINGUAL:
            for lang in LANGUAGES:
                key = f"{name}_description_{lang}"
                value = getattr(self, key)
                if value is not None:
                    d[key] = list(value) if name == "context" else value
        if self.asset_paths is not None:
            d["asset_paths"] = self.asset_paths.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "BenchmarkSample":
        kwargs: dict[str, Any] = {
            k: d[k]
            for k in ("id", "video_link", "video_source", "category", "timestamp", "resolution")
        }
        for name in _BILINGUAL:
            for lang in LANGUAGES:
                key = f"{name}_description_{lang}"
                if d.get(key) is not None:
                    kwargs[key] = tuple(d[key]) if name == "context" else d[key]
        if d.get("asset_paths"):
            kwargs["asset_paths"] = AssetPaths.from_dict(d["asset_paths"])
        return cls(**kwargs)


TEMPORAL_TEMPLATE = "Before: {before} After: {after}"


def query_from_sample(
    sample: BenchmarkSample,
    kind: "ConstraintKind | str",
    language: str = "en",
    temporal_context: str = "both",
) -> ShotQuery:
    """Build the retrieval request for ``sample`` under task ``kind``.

    ``temporal_context`` selects which context sentence(s) a Temporal query
    carries: ``"both"``, ``"before"`` or ``"after"``.
    """
    kind = ConstraintKind.parse(kind)
    description = sample.field_for("segment", language)
    text: Optional[str]
    if kind is ConstraintKind.SHOT:
        text = None
    elif kind is ConstraintKind.TEMPORAL:
        before, after = sample.field_for("context", language)
        if temporal_context == "before":
            text = f"Before: {before}"
        elif temporal_context == "after":
            text = f"After: {after}"
        elif temporal_context == "both":
            text = TEMPORAL_TEMPLATE.format(before=before, after=after)
        else:
            raise InvalidValue(f"unknown temporal_context {temporal_context!r}")
    elif kind is ConstraintKind.RESOLUTION:
        text = f"({sample.resolution})"
    else:
        text = sample.field_for(kind.value.lower(), language)
    return ShotQuery(description, kind, text, language)


@dataclass(frozen=True)
class VideoAsset:
    url: str
    local_path: str
    duration_s: float = 0.0
    width: int = 0
    height: int = 0
    probe_ok: bool = False

    def __post_init__(self):
        if self.probe_ok and not self.duration_s > 0:
            raise InvalidValue("probed video must have positive duration")

    def to_dict(self) -> dict:
        return {
            "url": self.url,
            "local_path": self.local_path,
            "duration_s": self.duration_s,
            "width": self.width,
            "height": self.height,
            "probe_ok": self.probe_ok,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "VideoAsset":
        return cls(
            url=d["url"],
            local_path=d["local_path"],
            duration_s=float(d.get("duration_s", 0.0)),
            width=int(d.get("width", 0)),
            height=int(d.get("height", 0)),
            probe_ok=bool(d.get("probe_ok", False)),
        )


def frame_time(i: int, n: int, duration_s: float) -> float:
    """Midpoint of the i-th of n equal bins over [0, duration_s]."""
    return (i + 0.5) / n * duration_s


@dataclass(frozen=True)
class Frame:
    index: int
    timestamp_s: float
    path: str


@dataclass(frozen=True)
class FrameGrid:
    video: VideoAsset
    num_frames: int
    frames: tuple[Frame, ...]
    audio_path: Optional[str] = None

    def __post_init__(self):
        if self.num_frames < 1 or len(self.frames) != self.num_frames:
            raise InvalidValue(f"grid holds {len(self.frames)} frames, expected {self.num_frames}")
        duration = self.video.duration_s
        for pos, fr in enumerate(self.frames):
            if fr.index != pos:
                raise InvalidValue("frame indices must be 0..N-1 in order")
            expected = frame_time(pos, self.num_frames, duration)
            if not math.isclose(fr.timestamp_s, expected, rel_tol=1e-9):
                raise InvalidValue(f"frame {pos} timestamp {fr.timestamp_s} != {expected}")

    @property
    def duration_s(self) -> float:
        return self.video.duration_s

    @property
    def timestamps(self) -> list[float]:
        return [f.timestamp_s for f in self.frames]

    def to_dict(self) -> dict:
        return {
            "video": self.video.to_dict(),
            "num_frames": self.num_frames,
            "frames": [
                {"index": f.index, "timestamp_s": f.timestamp_s, "path": f.path} for f in self.frames
            ],
            "audio_path": self.audio_path,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "FrameGrid":
        return cls(
            video=VideoAsset.from_dict(d["video"]),
            num_frames=int(d["num_frames"]),
            frames=tuple(Frame(int(f["index"]), float(f["timestamp_s"]), f["path"]) for f in d["frames"]),
            audio_path=d.get("audio_path"),
        )


@dataclass(frozen=True)
class LocalizationOutcome:
    """Grounding result for one candidate.

    ``frame_index`` is None for the no-match arm.
    """

    candidate: VideoAsset
    frame_index: Optional[int]
    num_frames: int
    chosen_timestamp_s: Optional[float]
    raw_model_output: str
    frame_path: Optional[str] = None
    error: Optional[str] = None
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        if self.frame_index is None:
            if self.chosen_timestamp_s is not None:
                raise InvalidValue("no-match outcome cannot carry a timestamp")
            return
        if not 0 <= self.frame_index < self.num_frames:
            raise InvalidValue(f"frame index {self.frame_index} outside [0, {self.num_frames - 1}]")
        expected = frame_time(self.frame_index, self.num_frames, self.candidate.duration_s)
        if self.chosen_timestamp_s is None or not math.isclose(
            self.chosen_timestamp_s, expected, rel_tol=1e-9
        ):
            raise InvalidValue("chosen timestamp must match the frame index")

    @property
    def matched(self) -> bool:
        return self.frame_index is not None

    def to_dict(self) -> dict:
        return {
            "candidate": self.candidate.to_dict(),
            "frame_index": self.frame_index,
            "num_frames": self.num_frames,
            "chosen_timestamp_s": self.chosen_timestamp_s,
            "raw_model_output": self.raw_model_output,
            "frame_path": self.frame_path,
            "error": self.error,
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "LocalizationOutcome":
        return cls(
            candidate=VideoAsset.from_dict(d["candidate"]),
            frame_index=d.get("frame_index"),
            num_frames=int(d["num_frames"]),
            chosen_timestamp_s=d.get("chosen_timestamp_s"),
            raw_model_output=d.get("raw_model_output", ""),
            frame_path=d.get("frame_path"),
            error=d.get("error"),
            notes=tuple(d.get("notes") or ()),
        )


@dataclass(frozen=True)
class Verdict:
    matched: bool
    judge_model: str
    rationale: str = ""

    def to_dict(self) -> dict:
        return {"matched": self.matched, "judge_model": self.judge_model, "rationale": self.rationale}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Verdict":
        return cls(bool(d["matched"]), d["judge_model"], d.get("rationale", ""))


@dataclass(frozen=True)
class FinalResult:
    success: bool
    winning_candidate: Optional[str] = None
    winning_frame: Optional[int] = None
    reason: Optional[str] = None

    def __post_init__(self):
        if self.success and (self.winning_candidate is None or self.winning_frame is None):
            raise InvalidValue("a successful run must name its winning candidate and frame")
        if not self.success and (self.winning_candidate is not None or self.winning_frame is not None):
            raise InvalidValue("a failed run cannot record a winner")

    def to_dict(self) -> dict:
        return {
            "success": self.success,
            "winning_candidate": self.winning_candidate,
            "winning_frame": self.winning_frame,
            "reason": self.reason,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "FinalResult":
        return cls(d["success"], d.get("winning_candidate"), d.get("winning_frame"), d.get("reason"))


@dataclass(frozen=True)
class RunRecord:
    sample_id: str
    task: ConstraintKind
    queries: tuple[str, ...]
    candidates: tuple[VideoAsset, ...]
    outcomes: tuple[LocalizationOutcome, ...]
    verdicts: tuple[Verdict, ...]
    final: FinalResult
    config_fingerprint: str
    dropped: tuple[tuple[str, str], ...] = ()
    stage_timings: Mapping[str, float] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not len(self.verdicts) <= len(self.outcomes) <= len(self.candidates):
            raise InvalidValue("need |verdicts| <= |outcomes| <= |candidates|")

    def with_timings(self, timings: Mapping[str, float]) -> "RunRecord":
        return replace(self, stage_timings=dict(timings))

    def to_dict(self, include_timings: bool = True) -> dict:
        d = {
            "sample_id": self.sample_id,
            "task": self.task.value,
            "queries": list(self.queries),
            "candidates": [c.to_dict() for c in self.candidates],
            "dropped": [list(x) for x in self.dropped],
            "outcomes": [o.to_dict() for o in self.outcomes],
            "verdicts": [v.to_dict() for v in self.verdicts],
            "final": self.final.to_dict(),
            "config_fingerprint": self.config_fingerprint,
        }
        if include_timings:
            d["stage_timings"] = dict(self.stage_timings)
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "RunRecord":
        return cls(
            sample_id=d["sample_id"],
            task=ConstraintKind.parse(d["task"]),
            queries=tuple(d.get("queries") or ()),
            candidates=tuple(VideoAsset.from_dict(c) for c in d.get("candidates") or ()),
            outcomes=tuple(LocalizationOutcome.from_dict(o) for o in d.get("outcomes") or ()),
            verdicts=tuple(Verdict.from_dict(v) for v in d.get("verdicts") or ()),
            final=FinalResult.from_dict(d["final"]),
            config_fingerprint=d.get("config_fingerprint", ""),
            dropped=tuple((u, r) for u, r in d.get("dropped") or ()),
            stage_timings=dict(d.get("stage_timings") or {}),
        )
