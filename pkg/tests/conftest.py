import json
import socket
import subprocess
from pathlib import Path

import pytest
from PIL import Image

from shotseek.backends.media import FFmpegMedia, find_ffmpeg
from shotseek.model import BenchmarkSample, VideoAsset


def make_clip(out: Path, duration: float = 10.0, size: str = "64x36", audio: bool = True, rate: int = 10) -> Path:
    """Test pattern clip with an optional sine track."""
    args = [find_ffmpeg(), "-hide_banner", "-v", "error", "-y",
            "-f", "lavfi", "-i", f"testsrc=s={size}:r={rate}:d={duration}"]
    if audio:
        args += ["-f", "lavfi", "-i", f"sine=frequency=330:sample_rate=22050:duration={duration}"]
    args += ["-c:v", "libx264", "-pix_fmt", "yuv420p", "-g", str(rate)]
    if audio:
        args += ["-c:a", "aac", "-shortest"]
    args.append(str(out))
    subprocess.run(args, check=True, capture_output=True)
    return out


def solid_jpeg(path: Path, rgb, size=(32, 18)) -> Path:
    Image.new("RGB", size, rgb).save(path, quality=95)
    return path


@pytest.fixture(scope="session")
def media():
    return FFmpegMedia()


@pytest.fixture(scope="session")
def clip10(tmp_path_factory, media):
    """A probed 10 s clip with audio, in its own directory."""
    d = tmp_path_factory.mktemp("clip10")
    path = make_clip(d / "video.mp4")
    info = media.probe(path)
    return VideoAsset("https://example.org/clip10", str(path), info.duration_s, info.width, info.height, True)


@pytest.fixture
def fresh_clip(tmp_path, media):
    path = make_clip(tmp_path / "video.mp4")
    info = media.probe(path)
    return VideoAsset("https://example.org/fresh", str(path), info.duration_s, info.width, info.height, True)


@pytest.fixture
def no_network(monkeypatch):
    """Fail loudly if anything opens an outbound connection."""
    attempts = []

    def guard(self, *args, **kwargs):
        attempts.append(args)
        raise OSError("network disabled in this test")

    monkeypatch.setattr(socket.socket, "connect", guard)
    monkeypatch.setattr(socket.socket, "connect_ex", guard)
    monkeypatch.setattr(socket, "create_connection", lambda *a, **k: guard(None, *a))
    return attempts


def record_dict(**overrides) -> dict:
    d = {
        "id": "youtube_abc123XYZ",
        "video_link": "https://www.youtube.com/watch?v=abc123XYZ",
        "video_source": "YouTube",
        "category": "Food",
        "timestamp": "2025-03-01 12:00:05",
        "resolution": "1080P",
        "segment_description_ch": "汤" * 250,
        "segment_description_en": "A chef ladles broth into a white bowl on a wooden counter.",
        "context_description_ch": ["厨师切葱。", "厨师端起碗。"],
        "context_description_en": ["The chef chops scallions.", "The chef lifts the bowl."],
        "color_description_ch": "暖色调。",
        "color_description_en": "Warm tones with amber highlights.",
        "style_description_ch": "真实拍摄。",
        "style_description_en": "Real footage, handheld.",
        "audio_description_ch": "锅具碰撞声。",
        "audio_description_en": "Clinking pots and a low voice.",
    }
    d.update(overrides)
    return d


@pytest.fixture
def sample():
    return BenchmarkSample.from_dict(record_dict())


@pytest.fixture(scope="session")
def minibench_root(tmp_path_factory):
    from shotseek.minibench import build_minibench

    return build_minibench(tmp_path_factory.mktemp("work") / "minibench")


def read_json(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


# -- acceptance reporting --------------------------------------------------------

ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
