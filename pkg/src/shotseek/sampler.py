"""Duration-adaptive uniform frame sampling.

A video of duration D is cut into N equal bins and frame i is grabbed at the
bin midpoint ``(i + 0.5) / N * D``. N comes from a tiered policy keyed on D.
"""

from __future__ import annotations

import json
import logging
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from ._locks import named_lock
from .backends import MediaExtractor
from .errors import IndexOutOfRange, InvalidValue, MediaToolFailure, PartialGrid
from .model import Frame, FrameGrid, VideoAsset, frame_time

log = logging.getLogger(__name__)

INF = math.inf


@dataclass(frozen=True)
class SamplingPolicy:
    """Frame budget per duration tier.

    ``tiers`` holds ``(upper_bound_s, frames)`` pairs with strictly
    increasing bounds ending in infinity. Bounds are exclusive: a video of
    exactly 180 s falls in the second default tier. ``flat`` overrides the
    tiers entirely.
    """

    tiers: tuple[tuple[float, int], ...] = ((180.0, 64), (600.0, 128), (INF, 192))
    flat: Optional[int] = None

    def __post_init__(self):
        if self.flat is not None and self.flat < 1:
            raise InvalidValue("flat frame count must be positive")
        if not self.tiers:
            raise InvalidValue("policy needs at least one tier")
        bounds = [b for b, _ in self.tiers]
        if any(b2 <= b1 for b1, b2 in zip(bounds, bounds[1:])):
            raise InvalidValue("tier bounds must be strictly increasing")
        if bounds[-1] != INF:
            raise InvalidValue("last tier bound must be infinite")
        if any(n < 1 for _, n in self.tiers):
            raise InvalidValue("tier frame counts must be positive")

    @classmethod
    def closed_source(cls) -> "SamplingPolicy":
        return cls()

    @classmethod
    def open_source(cls) -> "SamplingPolicy":
        return cls(flat=64)

    @classmethod
    def from_notation(cls, text: str, bounds: tuple[float, float] = (180.0, 600.0)) -> "SamplingPolicy":
        """Parse ``"X-Y-Z"`` (frames for <3 min, 3-10 min, >10 min) or a single flat count."""
        parts = re.split(r"\s*-\s*", text.strip())
        if len(parts) == 1:
            return cls(flat=int(parts[0]))
        if len(parts) != 3:
            raise InvalidValue(f"expected X-Y-Z, got {text!r}")
        x, y, z = (int(p) for p in parts)
        return cls(tiers=((bounds[0], x), (bounds[1], y), (INF, z)))

    @property
    def notation(self) -> str:
        if self.flat is not None:
            return str(self.flat)
        return "-".join(str(n) for _, n in self.tiers)

    def to_dict(self) -> dict:
        return {
            "tiers": [[None if b == INF else b, n] for b, n in self.tiers],
            "flat": self.flat,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SamplingPolicy":
        if "notation" in d:
            return cls.from_notation(str(d["notation"]))
        tiers = tuple((INF if b is None else float(b), int(n)) for b, n in d.get("tiers") or cls().to_dict()["tiers"])
        return cls(tiers=tiers, flat=d.get("flat"))


def frames_for_duration(policy: SamplingPolicy, duration_s: float) -> int:
    if not duration_s > 0:
        raise InvalidValue("duration must be positive")
    if policy.flat is not None:
        return policy.flat
    for bound, frames in policy.tiers:
        if duration_s < bound:
            return frames
    raise AssertionError("last tier is unbounded")


def timestamp_of(i: int, n: int, duration_s: float) -> float:
    if n < 1:
        raise InvalidValue("frame count must be positive")
    if not 0 <= i < n:
        raise IndexOutOfRange(f"frame {i} outside [0, {n - 1}]")
    if not duration_s > 0:
        raise InvalidValue("duration must be positive")
    return frame_time(i, n, duration_s)


def grid_dir(video: VideoAsset, n: int) -> Path:
    return Path(video.local_path).parent / f"frames_{n}"


def _cached_frames(video: VideoAsset, n: int) -> Optional[tuple[Frame, ...]]:
    meta_path = grid_dir(video, n) / "grid.json"
    if not meta_path.is_file():
        return None
    try:
        meta = json.loads(meta_path.read_text())
    except json.JSONDecodeError:
        return None
    if meta.get("num_frames") != n or meta.get("duration_s") != video.duration_s:
        return None
    frames = tuple(
        Frame(i, frame_time(i, n, video.duration_s), str(grid_dir(video, n) / name))
        for i, name in enumerate(meta.get("frames", []))
    )
    if len(frames) != n or not all(Path(f.path).is_file() for f in frames):
        return None
    return frames


def _extract_grid(video: VideoAsset, n: int, media: MediaExtractor) -> tuple[Frame, ...]:
    out_dir = grid_dir(video, n)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = [f"frame_{i:04d}.jpg" for i in range(n)]
    outputs = [out_dir / name for name in names]
    for p in outputs:
        p.unlink(missing_ok=True)
    times = [frame_time(i, n, video.duration_s) for i in range(n)]
    try:
        media.extract_frames(video.local_path, times, outputs)
    except MediaToolFailure:
        got = sum(1 for p in outputs if p.is_file())
        if 0 < got < n:
            raise PartialGrid(got, n)
        raise
    got = sum(1 for p in outputs if p.is_file())
    if got != n:
        raise PartialGrid(got, n)
    meta = {"num_frames": n, "duration_s": video.duration_s, "timestamps": times, "frames": names}
    (out_dir / "grid.json").write_text(json.dumps(meta, indent=1))
    return tuple(Frame(i, t, str(p)) for i, (t, p) in enumerate(zip(times, outputs)))


AUDIO_NAME = "audio.mp3"


def sample(
    video: VideoAsset,
    policy: SamplingPolicy,
    with_audio: bool,
    media: MediaExtractor,
    num_frames: Optional[int] = None,
) -> FrameGrid:
    """Grab N frames (and optionally the full audio track), reusing on-disk results.

    ``num_frames`` forces N regardless of policy.
    """
    if not video.probe_ok:
        raise InvalidValue(f"video {video.url} has not been probed successfully")
    n = num_frames or frames_for_duration(policy, video.duration_s)
    # concurrent samples may share a candidate video
    with named_lock(str(grid_dir(video, n))):
        frames = _cached_frames(video, n)
        if frames is None:
            frames = _extract_grid(video, n, media)
    audio = None
    if with_audio:
        audio_path = Path(video.local_path).parent / AUDIO_NAME
        with named_lock(str(audio_path)):
            if not audio_path.is_file():
                partial = audio_path.with_name("audio.partial.mp3")
                media.extract_audio(video.local_path, partial)
                partial.replace(audio_path)
        audio = str(audio_path)
    return FrameGrid(video, n, frames, audio)
