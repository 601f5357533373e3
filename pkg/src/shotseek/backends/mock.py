"""Deterministic offline backends for tests and fixture recording."""

from __future__ import annotations

import hashlib
import shutil
from pathlib import Path
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

from PIL import Image

from ..errors import Truncated, Unreachable
from .base import ChatRequest, EmbeddingRequest, ImagePart, SearchResult
from .commands import DEFAULT_SUFFIX, with_suffix


class EchoChat:
    """Replies ``"echo: " + <all text parts joined by newlines>``."""

    def __init__(self):
        self.calls: list[ChatRequest] = []

    def chat(self, req: ChatRequest) -> str:
        self.calls.append(req)
        return "echo: " + req.text


class ScriptedChat:
    """Returns canned replies in order, or computes them with a callable.

    A reply that is an exception instance is raised instead of returned.
    With a sequence, the last reply repeats once the script runs out.
    """

    def __init__(self, script: Union[Sequence[Union[str, Exception]], Callable[[ChatRequest], str]]):
        self.script = script
        self.calls: list[ChatRequest] = []

    def chat(self, req: ChatRequest) -> str:
        self.calls.append(req)
        if callable(self.script):
            reply = self.script(req)
        else:
            reply = self.script[min(len(self.calls) - 1, len(self.script) - 1)]
        if isinstance(reply, Exception):
            raise reply
        return reply


def pixel_digest(path: "str | Path") -> bytes:
    with Image.open(path) as im:
        rgb = im.convert("RGB")
        return hashlib.sha256(f"{rgb.width}x{rgb.height}:".encode() + rgb.tobytes()).digest()


class HashEmbedder:
    """Maps decoded pixels (or text) to a fixed ``dim``-vector via SHA-256.

    Component k is ``digest[k] / 127.5 - 1``, so values lie in [-1, 1].
    """

    def __init__(self, dim: int = 8):
        if not 1 <= dim <= 32:
            raise ValueError("dim must be within 1..32")
        self.dim = dim
        self.calls = 0

    def embed(self, req: EmbeddingRequest) -> list[float]:
        self.calls += 1
        if isinstance(req.payload, ImagePart):
            digest = pixel_digest(req.payload.path)
        else:
            digest = hashlib.sha256(req.payload.text.encode("utf-8")).digest()
        return [b / 127.5 - 1.0 for b in digest[: self.dim]]


class FixedEmbedder:
    """Looks vectors up by image file name (or text)."""

    def __init__(self, table: Mapping[str, Sequence[float]]):
        self.table = {k: list(v) for k, v in table.items()}
        self.calls = 0

    def embed(self, req: EmbeddingRequest) -> list[float]:
        self.calls += 1
        if isinstance(req.payload, ImagePart):
            key = Path(req.payload.path).name
        else:
            key = req.payload.text
        return list(self.table[key])


class StaticSearch:
    def __init__(self, table: Mapping[str, Iterable[str]], suffix: str = DEFAULT_SUFFIX):
        self.table = {k: tuple(v) for k, v in table.items()}
        self.suffix = suffix
        self.outbound: list[str] = []

    def search(self, query: str) -> SearchResult:
        outbound = with_suffix(query, self.suffix)
        self.outbound.append(outbound)
        return SearchResult(query, self.table.get(query, ()), outbound)


class LocalFetcher:
    """Serves URLs from local files.

    ``sources`` maps URL to a file path, or to ``"unreachable"`` /
    ``"truncated"`` to simulate the two failure modes. Unknown URLs are
    unreachable. Truncated downloads copy only the first half of the bytes.
    """

    def __init__(self, sources: Mapping[str, str]):
        self.sources = dict(sources)
        self.probes: list[str] = []
        self.fetches: list[str] = []

    def _source(self, url: str) -> Optional[str]:
        return self.sources.get(url)

    def probe(self, url: str) -> dict:
        self.probes.append(url)
        src = self._source(url)
        if src is None or src == "unreachable":
            raise Unreachable(url, "not found")
        return {}

    def fetch(self, url: str, dest: Path) -> Path:
        self.fetches.append(url)
        src = self._source(url)
        if src is None or src == "unreachable":
            raise Unreachable(url, "not found")
        dest = Path(dest)
        dest.mkdir(parents=True, exist_ok=True)
        if src == "truncated":
            raise Truncated(url, "connection closed mid-transfer")
        if src.startswith("corrupt:"):
            # download "succeeds" but the bytes are not a playable video
            src = src[len("corrupt:") :]
            out = dest / f"video{Path(src).suffix}"
            data = Path(src).read_bytes()
            out.write_bytes(data[: len(data) // 8])
            return out
        out = dest / f"video{Path(src).suffix}"
        shutil.copyfile(src, out)
        return out
