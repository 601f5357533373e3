"""10-second asset windows around a target moment, and the temporal-diversity gate."""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from pathlib import Path
from typing import Optional, Sequence

from ..backends import EmbeddingBackend, EmbeddingRequest, ImagePart, MediaExtractor
from ..errors import InvalidValue, WindowClipped
from ..judge import cosine
from ..model import VideoAsset

log = logging.getLogger(__name__)

HALF_WINDOW = 5.0
OFFSETS = (1, 2, 3)
DIVERSITY_THRESHOLD = 0.8


def resolution_label(height: int) -> str:
    return "1080P" if height >= 1080 else "720P"


@dataclass(frozen=True)
class AssetBundle:
    """Target frame with three frames either side at 1 s spacing, plus window audio.

    ``preceding`` is ordered t-1, t-2, t-3 and ``following`` t+1, t+2, t+3.
    """

    timestamp_s: float
    target_frame: str
    preceding: tuple[str, str, str]
    following: tuple[str, str, str]
    audio: Optional[str]
    meta: dict

    def __post_init__(self):
        if len(self.preceding) != 3 or len(self.following) != 3:
            raise InvalidValue("bundle needs exactly 3 preceding and 3 following frames")

    @property
    def chronological(self) -> list[str]:
        return [*reversed(self.preceding), self.target_frame, *self.following]

    @property
    def frame_times(self) -> list[float]:
        t = self.timestamp_s
        return [t - 3, t - 2, t - 1, t, t + 1, t + 2, t + 3]


def extract_bundle(
    video: VideoAsset,
    t: float,
    media: MediaExtractor,
    out_dir: "str | Path",
    with_audio: bool = True,
) -> AssetBundle:
    d = video.duration_s
    if not HALF_WINDOW <= t <= d - HALF_WINDOW:
        raise WindowClipped(f"window [{t - HALF_WINDOW:.2f}, {t + HALF_WINDOW:.2f}] leaves [0, {d:.2f}]")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = [f"preceding_{k}.jpg" for k in (3, 2, 1)] + ["target.jpg"] + [f"following_{k}.jpg" for k in OFFSETS]
    times = [t - 3, t - 2, t - 1, t, t + 1, t + 2, t + 3]
    paths = [out / name for name in names]
    media.extract_frames(video.local_path, times, paths)
    audio = None
    if with_audio:
        audio = str(media.extract_audio(video.local_path, out / "audio.mp3", t - HALF_WINDOW, 2 * HALF_WINDOW))
    meta = {
        "target_timestamp": t,
        "video_duration": d,
        "resolution": resolution_label(video.height),
        "width": video.width,
        "height": video.height,
        "source_url": video.url,
        "paths": {
            "target_frame": names[3],
            "preceding_frames": [names[2], names[1], names[0]],
            "following_frames": names[4:],
            "audio_clip": "audio.mp3" if audio else None,
        },
    }
    (out / "metadata.json").write_text(json.dumps(meta, indent=1))
    return AssetBundle(
        timestamp_s=t,
        target_frame=str(paths[3]),
        preceding=(str(paths[2]), str(paths[1]), str(paths[0])),
        following=(str(paths[4]), str(paths[5]), str(paths[6])),
        audio=audio,
        meta=meta,
    )


class Decision(str, Enum):
    ACCEPT = "accept"
    REJECT = "reject"


def _pairs(n: int, mode: str) -> list[tuple[int, int]]:
    if mode == "adjacent":
        return [(i, i + 1) for i in range(n - 1)]
    if mode == "all":
        return list(combinations(range(n), 2))
    raise InvalidValue(f"unknown pair mode {mode!r}")


def diversity_gate(
    bundle: "AssetBundle | Sequence[str]",
    embed: EmbeddingBackend,
    threshold: float = DIVERSITY_THRESHOLD,
    pairs: str = "adjacent",
    model: str = "clip",
) -> Decision:
    """Reject a window whose frames are all near-duplicates.

    Similarity must strictly exceed ``threshold`` on every compared pair
    for a rejection; a single pair at or below it accepts.
    """
    frames = bundle.chronological if isinstance(bundle, AssetBundle) else list(bundle)
    if len(frames) != 7:
        raise InvalidValue(f"expected 7 frames, got {len(frames)}")
    vecs = [embed.embed(EmbeddingRequest(ImagePart(str(f)), model)) for f in frames]
    for i, j in _pairs(len(vecs), pairs):
        if not cosine(vecs[i], vecs[j]) > threshold:
            return Decision.ACCEPT
    return Decision.REJECT


def pick_timestamp(duration_s: float, rng: random.Random) -> float:
    if duration_s < 2 * HALF_WINDOW:
        raise WindowClipped(f"video of {duration_s:.2f}s cannot hold a {2 * HALF_WINDOW:.0f}s window")
    return rng.uniform(HALF_WINDOW, duration_s - HALF_WINDOW)


def diverse_bundle(
    video: VideoAsset,
    media: MediaExtractor,
    embed: EmbeddingBackend,
    out_dir: "str | Path",
    rng: random.Random,
    max_tries: int = 10,
    threshold: float = DIVERSITY_THRESHOLD,
    pairs: str = "adjacent",
) -> Optional[AssetBundle]:
    """Draw target times until the window passes the diversity gate."""
    for attempt in range(max_tries):
        t = round(pick_timestamp(video.duration_s, rng), 3)
        bundle = extract_bundle(video, t, media, out_dir)
        if diversity_gate(bundle, embed, threshold, pairs) is Decision.ACCEPT:
            return bundle
        log.info("%s: window at %.3fs too static (attempt %d)", video.url, t, attempt + 1)
    return None
