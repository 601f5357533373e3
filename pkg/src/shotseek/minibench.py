"""A ten-sample offline benchmark built from synthetic colour-block clips.

Each clip is four solid-colour segments over a sine tone. The stand-in
"models" answer from pixel content: the generator turns the described
colour into queries, the localizer picks the frame whose mean colour is
closest to it, and the judge compares the mean colours of the two frames.
That is enough to exercise every pipeline branch (early stop, dead URLs,
truncated downloads, generator failure) without a network.
"""

from __future__ import annotations

import json
import re
import subprocess
import threading
from pathlib import Path
from typing import Optional

from PIL import Image, ImageStat

from .backends import Backends, ChatRequest
from .backends.media import FFmpegMedia, find_ffmpeg
from .backends.mock import HashEmbedder, LocalFetcher, StaticSearch
from .errors import MediaToolFailure
from .generator import render_agent_output

PALETTE = {
    "red": (220, 30, 30),
    "green": (30, 170, 60),
    "blue": (30, 60, 220),
    "yellow": (230, 220, 40),
    "magenta": (210, 40, 200),
    "cyan": (40, 210, 220),
    "orange": (240, 140, 20),
    "white": (235, 235, 235),
    "purple": (110, 40, 160),
    "black": (15, 15, 15),
}

SEGMENT_S = 4.0
SIZE = "96x54"
FPS = 10

CLIPS = {
    "A": ("red", "green", "blue", "yellow"),
    "B": ("magenta", "cyan", "orange", "white"),
    "C": ("green", "purple", "red", "cyan"),
    "D": ("blue", "orange", "purple", "magenta"),
    "E": ("yellow", "white", "cyan", "green"),
    "F": ("orange", "red", "white", "blue"),
}


def url_for(clip: str) -> str:
    return f"https://www.youtube.com/watch?v=minibench{clip}01"


DEAD = "https://www.youtube.com/watch?v=minibenchX404"
CUT = "https://www.youtube.com/watch?v=minibenchXcut"
BROKEN = "https://www.youtube.com/watch?v=minibenchXbad"

# id, task, colour, clip holding the ground truth, results for query 1, results for query 2
SAMPLES = (
    ("mb01", "Shot", "red", "A", ["A"], ["C"]),
    ("mb02", "Temporal", "green", "A", ["B", DEAD, "A"], ["E"]),
    ("mb03", "Color", "blue", "A", [DEAD, CUT], [BROKEN]),
    ("mb04", "Style", "yellow", "A", ["B", "C"], ["D"]),
    ("mb05", "Resolution", "orange", "D", ["D"], ["D", "B"]),
    ("mb06", "Audio", "cyan", "E", ["E"], ["C"]),
    ("mb07", "Shot", "purple", "C", ["A", "C"], ["D"]),
    ("mb08", "Temporal", "magenta", "B", ["B"], ["D"]),
    ("mb09", "Color", "white", "B", ["B"], ["E"]),
    ("mb10", "Style", "black", "F", ["F", "A"], ["B"]),
)
# descriptions containing this word make the stand-in generator refuse to call the tool
REFUSAL_WORD = "static"
REFUSING = {"mb09"}

CATEGORIES = {
    "Shot": "Knowledge",
    "Temporal": "Food",
    "Color": "Tech",
    "Style": "Music",
    "Resolution": "Fashion",
    "Audio": "Animals",
}


def queries_for(colour: str, m: int) -> list[str]:
    base = [f"{colour} screen footage", f"{colour} colour clip", f"{colour} solid background"]
    base += [f"{colour} video {k}" for k in range(4, m + 1)]
    return base[:m]


def description(sample_id: str, colour: str) -> str:
    text = f"A flat {colour} screen fills the entire frame with no other objects"
    if sample_id in REFUSING:
        text += f", like {REFUSAL_WORD} on a dead channel"
    return text + "."


# -- building ----------------------------------------------------------------------


def _make_clip(ffmpeg: str, colours, out: Path) -> None:
    args = [ffmpeg, "-hide_banner", "-v", "error", "-y"]
    for c in colours:
        r, g, b = PALETTE[c]
        args += ["-f", "lavfi", "-i", f"color=c=0x{r:02x}{g:02x}{b:02x}:s={SIZE}:r={FPS}:d={SEGMENT_S}"]
    total = SEGMENT_S * len(colours)
    args += ["-f", "lavfi", "-i", f"sine=frequency=440:sample_rate=22050:duration={total}"]
    k = len(colours)
    chain = "".join(f"[{i}:v]" for i in range(k)) + f"concat=n={k}:v=1:a=0[v]"
    args += ["-filter_complex", chain, "-map", "[v]", "-map", f"{k}:a"]
    args += ["-c:v", "libx264", "-pix_fmt", "yuv420p", "-g", str(FPS), "-c:a", "aac", "-b:a", "64k"]
    args += ["-fflags", "+bitexact", "-flags:v", "+bitexact", "-flags:a", "+bitexact", "-shortest", str(out)]
    proc = subprocess.run(args, capture_output=True, text=True)
    if proc.returncode != 0 or not out.is_file():
        raise MediaToolFailure(f"could not synthesize {out.name}", proc.stderr)


def _sample_record(sid: str, task: str, colour: str, clip: str) -> dict:
    return {
        "task": task,
        "id": sid,
        "video_link": url_for(clip),
        "video_source": "YouTube",
        "category": CATEGORIES[task],
        "timestamp": "2025-01-01 00:00:00",
        "resolution": "720P",
        "segment_description_en": description(sid, colour),
        "segment_description_ch": f"画面被纯{colour}色填满，没有其他物体。",
        "context_description_en": ["The screen holds one steady tone.", "The tone then changes abruptly."],
        "context_description_ch": ["画面保持单一色调。", "随后色调突然变化。"],
        "color_description_en": "A uniform tone with no gradients.",
        "color_description_ch": "统一色调，没有渐变。",
        "style_description_en": "Graphic, a flat rendered card.",
        "style_description_ch": "图形风格，平面色卡。",
        "audio_description_en": "A steady sine tone plays throughout.",
        "audio_description_ch": "持续播放稳定的正弦音。",
        "asset_paths": {"target_frame": f"frames/{sid}.jpg", "preceding_frames": [], "following_frames": []},
    }


def build_minibench(root: "str | Path", media: Optional[FFmpegMedia] = None) -> Path:
    """Write clips, ground-truth frames, ``samples.json``, search and source tables under ``root``.

    Existing files are kept, so a second build is cheap.
    """
    root = Path(root)
    media = media or FFmpegMedia()
    ffmpeg = find_ffmpeg()
    (root / "clips").mkdir(parents=True, exist_ok=True)
    (root / "frames").mkdir(parents=True, exist_ok=True)
    for name, colours in CLIPS.items():
        out = root / "clips" / f"{name}.mp4"
        if not out.is_file():
            _make_clip(ffmpeg, colours, out)

    records = []
    search: dict[str, list[str]] = {}
    for sid, task, colour, clip, first, second in SAMPLES:
        records.append(_sample_record(sid, task, colour, clip))
        frame = root / "frames" / f"{sid}.jpg"
        if not frame.is_file():
            if colour in CLIPS[clip]:
                t = (CLIPS[clip].index(colour) + 0.5) * SEGMENT_S
                media.extract_frames(root / "clips" / f"{clip}.mp4", [t], [frame])
            else:
                r, g, b = PALETTE[colour]
                w, h = (int(x) for x in SIZE.split("x"))
                Image.new("RGB", (w, h), (r, g, b)).save(frame, quality=95)
        q1, q2 = queries_for(colour, 2)
        search[q1] = [url_for(x) if len(x) == 1 else x for x in first]
        search[q2] = [url_for(x) if len(x) == 1 else x for x in second]

    sources = {url_for(name): f"clips/{name}.mp4" for name in CLIPS}
    sources[DEAD] = "unreachable"
    sources[CUT] = "truncated"
    sources[BROKEN] = "corrupt:clips/A.mp4"

    def dump(name, obj):
        (root / name).write_text(json.dumps(obj, indent=1, ensure_ascii=False) + "\n", encoding="utf-8")

    dump("samples.json", records)
    dump("search.json", search)
    dump("sources.json", sources)
    dump("config.json", {"backends": {"type": "minibench", "root": str(root.resolve())}, "workers": 4})
    return root


# -- stand-in models -------------------------------------------------------------------

_USER_RE = re.compile(r'^User: "(.*)"\s*$', re.M)
_TARGET_RE = re.compile(r'^Target Description[^:]*: "(.*)"\s*$', re.M)
_JUDGE_RE = re.compile(r'^Target description: "(.*)"\s*$', re.M)
_WORD_RE = re.compile(r"[a-z]+")

MATCH_DISTANCE = 40.0


def colour_in(text: str) -> Optional[str]:
    for word in _WORD_RE.findall(text.lower()):
        if word in PALETTE:
            return word
    return None


def _dist(a, b) -> float:
    return sum((x - y) ** 2 for x, y in zip(a, b)) ** 0.5


class MiniBenchChat:
    """Routes on which prompt template it receives and answers from pixels."""

    def __init__(self):
        self._lock = threading.Lock()
        self._means: dict[str, tuple[float, ...]] = {}
        self.calls = 0

    def _mean(self, path: str) -> tuple[float, ...]:
        with self._lock:
            if path not in self._means:
                with Image.open(path) as im:
                    self._means[path] = tuple(ImageStat.Stat(im.convert("RGB")).mean)
            return self._means[path]

    def chat(self, req: ChatRequest) -> str:
        with self._lock:
            self.calls += 1
        text = req.text
        if "search_videos" in text:
            return self._generate(text)
        if "Visual Frame Grounding" in text:
            return self._ground(text, req.images)
        if "evaluator for a video shot retrieval" in text:
            return self._judge(text, req.images)
        return "I do not understand the request."

    def _generate(self, text: str) -> str:
        users = _USER_RE.findall(text)
        ask = users[-1] if users else ""
        if REFUSAL_WORD in ask.lower():
            return "I would rather not search for that."
        colour = colour_in(ask) or "grey"
        m = text.count("your search term")
        return render_agent_output(f"The user remembers a {colour} card.", queries_for(colour, max(m, 1)))

    def _ground(self, text: str, images: list[str]) -> str:
        m = _TARGET_RE.search(text)
        colour = colour_in(m.group(1)) if m else None
        if colour is None or not images:
            return '<tool_call>{"frame_id": "N/A"}</tool_call>'
        target = PALETTE[colour]
        dists = [_dist(self._mean(p), target) for p in images]
        best = min(range(len(images)), key=dists.__getitem__)
        if dists[best] > MATCH_DISTANCE and "N/A" in text and "Do not return" not in text:
            return '<tool_call>{"frame_id": "N/A"}</tool_call>'
        return f'<tool_call>{{"frame_id": {best}}}</tool_call>'

    def _judge(self, text: str, images: list[str]) -> str:
        if len(images) != 2:
            return "FALSE\nExpected two images."
        same = _dist(self._mean(images[0]), self._mean(images[1])) <= MATCH_DISTANCE
        return "TRUE\nThe frames share the same flat colour." if same else "FALSE\nThe colours differ."


def minibench_backends(root: "str | Path") -> Backends:
    root = Path(root)
    search = json.loads((root / "search.json").read_text(encoding="utf-8"))
    sources = json.loads((root / "sources.json").read_text(encoding="utf-8"))

    def resolve(src: str) -> str:
        if src in ("unreachable", "truncated"):
            return src
        if src.startswith("corrupt:"):
            return "corrupt:" + str(root / src[len("corrupt:") :])
        return str(root / src)

    return Backends(
        chat=MiniBenchChat(),
        embed=HashEmbedder(),
        search=StaticSearch(search),
        fetcher=LocalFetcher({u: resolve(s) for u, s in sources.items()}),
        media=FFmpegMedia(),
    )
