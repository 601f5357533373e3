"""ffmpeg-backed media extractor (probe, frame grabs, audio cuts)."""

from __future__ import annotations

import logging
import os
import re
import shutil
import subprocess
from pathlib import Path
from typing import Optional, Sequence

from ..errors import MediaToolFailure
from .base import MediaInfo

log = logging.getLogger(__name__)

_DURATION_RE = re.compile(r"Duration:\s*(\d+):(\d+):(\d+(?:\.\d+)?)")
_VIDEO_RE = re.compile(r"Stream #\S+.*?: Video: .*?(\d{2,5})x(\d{2,5})")
_FPS_RE = re.compile(r"([\d.]+) fps")

# frames grabbed per ffmpeg process
BATCH = 24


def find_ffmpeg(explicit: Optional[str] = None) -> str:
    if explicit:
        return explicit
    env = os.environ.get("SHOTSEEK_FFMPEG")
    if env:
        return env
    found = shutil.which("ffmpeg")
    if found:
        return found
    try:
        import imageio_ffmpeg
    except ImportError as exc:
        raise MediaToolFailure("ffmpeg not found; install it or imageio-ffmpeg") from exc
    return imageio_ffmpeg.get_ffmpeg_exe()


class FFmpegMedia:
    def __init__(self, ffmpeg: Optional[str] = None, timeout: float = 600.0):
        self.ffmpeg = find_ffmpeg(ffmpeg)
        self.timeout = timeout
        self.calls = 0

    def _run(self, args: list[str], check: bool = True) -> subprocess.CompletedProcess:
        self.calls += 1
        try:
            proc = subprocess.run(
                [self.ffmpeg, "-hide_banner", *args],
                capture_output=True,
                text=True,
                timeout=self.timeout,
            )
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise MediaToolFailure(f"ffmpeg failed to run: {exc}") from exc
        if check and proc.returncode != 0:
            raise MediaToolFailure(f"ffmpeg exited {proc.returncode}", proc.stderr)
        return proc

    def probe(self, path: "str | Path") -> MediaInfo:
        if not Path(path).is_file():
            raise MediaToolFailure(f"no such file: {path}")
        # `ffmpeg -i` with no output exits 1 but still prints the stream table
        proc = self._run(["-i", str(path)], check=False)
        err = proc.stderr
        m = _DURATION_RE.search(err)
        if not m:
            raise MediaToolFailure(f"cannot read duration of {path}", err)
        h, mnt, s = m.groups()
        duration = int(h) * 3600 + int(mnt) * 60 + float(s)
        width = height = 0
        fps = 0.0
        video_line = next((ln for ln in err.splitlines() if "Video:" in ln and "Stream #" in ln), None)
        if video_line:
            vm = _VIDEO_RE.search(video_line)
            if vm:
                width, height = int(vm.group(1)), int(vm.group(2))
            fm = _FPS_RE.search(video_line)
            if fm:
                fps = float(fm.group(1))
        has_audio = any("Audio:" in ln and "Stream #" in ln for ln in err.splitlines())
        return MediaInfo(
            duration_s=duration,
            width=width,
            height=height,
            fps=fps,
            has_video=video_line is not None,
            has_audio=has_audio,
        )

    def extract_frames(self, path: "str | Path", times: Sequence[float], outputs: Sequence[Path]) -> None:
        """Grab the frame nearest each time. Raises if any output is missing."""
        if len(times) != len(outputs):
            raise ValueError("times and outputs differ in length")
        info = self.probe(path)
        if not info.has_video:
            raise MediaToolFailure(f"{path} has no video stream")
        # input seeking past the last frame's start yields nothing; clamp to it
        last_start = info.duration_s - (1.0 / info.fps if info.fps > 0 else 0.0)
        seeks = [min(float(t), max(last_start, 0.0)) for t in times]
        for out in outputs:
            Path(out).parent.mkdir(parents=True, exist_ok=True)
        for lo in range(0, len(seeks), BATCH):
            chunk = list(zip(seeks[lo : lo + BATCH], outputs[lo : lo + BATCH]))
            args: list[str] = ["-v", "error", "-y"]
            for t, _ in chunk:
                args += ["-ss", f"{t:.6f}", "-i", str(path)]
            for j, (_, out) in enumerate(chunk):
                args += ["-map", f"{j}:v:0", "-frames:v", "1", "-q:v", "2", str(out)]
            self._run(args)
        for t, out in zip(seeks, outputs):
            if not Path(out).is_file():
                self._grab_backwards(path, t, Path(out))

    def _grab_backwards(self, path, t: float, out: Path) -> None:
        for back in (0.05, 0.25, 0.5, 1.0):
            self._run(["-v", "error", "-y", "-ss", f"{max(t - back, 0.0):.6f}", "-i", str(path),
                       "-frames:v", "1", "-q:v", "2", str(out)])
            if out.is_file():
                return
        raise MediaToolFailure(f"no decodable frame near t={t:.3f}s in {path}")

    def extract_audio(
        self,
        path: "str | Path",
        output: Path,
        start: Optional[float] = None,
        duration: Optional[float] = None,
    ) -> Path:
        args = ["-v", "error", "-y"]
        if start is not None:
            args += ["-ss", f"{start:.6f}"]
        args += ["-i", str(path)]
        if duration is not None:
            args += ["-t", f"{duration:.6f}"]
        output = Path(output)
        output.parent.mkdir(parents=True, exist_ok=True)
        args += ["-vn", "-map", "0:a:0", "-ac", "1", "-ar", "22050", "-c:a", "libmp3lame", "-q:a", "4", str(output)]
        self._run(args)
        if not output.is_file() or output.stat().st_size == 0:
            raise MediaToolFailure(f"no audio written for {path}")
        return output
