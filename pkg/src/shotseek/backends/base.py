"""Request types and the interfaces every external dependency implements."""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Protocol, Sequence, TypeVar, Union, runtime_checkable

from ..errors import InvalidValue, MissingFixture, TransportError
from ..model import VideoAsset

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TextPart:
    text: str


@dataclass(frozen=True)
class ImagePart:
    path: str


@dataclass(frozen=True)
class AudioPart:
    path: str


Part = Union[TextPart, ImagePart, AudioPart]


@dataclass(frozen=True)
class ChatRequest:
    user_parts: tuple[Part, ...]
    model: str
    temperature: float = 0.0
    system: Optional[str] = None

    @property
    def text(self) -> str:
        """All text parts joined; handy for mocks that route on prompt content."""
        return "\n".join(p.text for p in self.user_parts if isinstance(p, TextPart))

    @property
    def images(self) -> list[str]:
        return [p.path for p in self.user_parts if isinstance(p, ImagePart)]

    @property
    def audio(self) -> list[str]:
        return [p.path for p in self.user_parts if isinstance(p, AudioPart)]


@dataclass(frozen=True)
class EmbeddingRequest:
    payload: Union[TextPart, ImagePart]
    model: str

    def __post_init__(self):
        if isinstance(self.payload, TextPart) and not self.payload.text:
            raise InvalidValue("embedding payload is empty")
        if isinstance(self.payload, ImagePart) and not self.payload.path:
            raise InvalidValue("embedding payload is empty")


@dataclass(frozen=True)
class SearchResult:
    query: str
    urls: tuple[str, ...]
    outbound_query: str = ""

    @property
    def ranked(self) -> list[tuple[int, str]]:
        return list(enumerate(self.urls))


@dataclass(frozen=True)
class MediaInfo:
    duration_s: float
    width: int = 0
    height: int = 0
    fps: float = 0.0
    has_video: bool = True
    has_audio: bool = False


@runtime_checkable
class ChatBackend(Protocol):
    def chat(self, req: ChatRequest) -> str: ...


@runtime_checkable
class EmbeddingBackend(Protocol):
    def embed(self, req: EmbeddingRequest) -> list[float]: ...


@runtime_checkable
class SearchBackend(Protocol):
    def search(self, query: str) -> SearchResult: ...


@runtime_checkable
class VideoFetcher(Protocol):
    def probe(self, url: str) -> dict:
        """Cheap accessibility check; raises Unreachable."""
        ...

    def fetch(self, url: str, dest: Path) -> Path:
        """Download into ``dest`` and return the video file path."""
        ...


class MediaExtractor(Protocol):
    def probe(self, path: "str | Path") -> MediaInfo: ...

    def extract_frames(self, path: "str | Path", times: Sequence[float], outputs: Sequence[Path]) -> None: ...

    def extract_audio(
        self,
        path: "str | Path",
        output: Path,
        start: Optional[float] = None,
        duration: Optional[float] = None,
    ) -> Path: ...


@dataclass
class Backends:
    chat: Optional[ChatBackend] = None
    embed: Optional[EmbeddingBackend] = None
    search: Optional[SearchBackend] = None
    fetcher: Optional[VideoFetcher] = None
    media: Optional[MediaExtractor] = None


def extract_frame(media: MediaExtractor, video: VideoAsset, t: float, output: Path) -> Path:
    """Write the frame nearest to ``t`` seconds of ``video`` to ``output``."""
    if not 0 < t < video.duration_s:
        raise InvalidValue(f"t={t} outside (0, {video.duration_s})")
    media.extract_frames(video.local_path, [t], [output])
    return output


# -- hashing ----------------------------------------------------------------


def file_digest(path: "str | Path") -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _part_key(part: Part) -> dict:
    if isinstance(part, TextPart):
        return {"text": part.text}
    kind = "image" if isinstance(part, ImagePart) else "audio"
    # content-addressed so journals survive moving the cache directory
    return {kind: file_digest(part.path)}


def canonical_request(req: "ChatRequest | EmbeddingRequest | str") -> dict:
    if isinstance(req, ChatRequest):
        return {
            "model": req.model,
            "system": req.system,
            "temperature": req.temperature,
            "parts": [_part_key(p) for p in req.user_parts],
        }
    if isinstance(req, EmbeddingRequest):
        return {"model": req.model, "payload": _part_key(req.payload)}
    return {"query": req}


def request_hash(kind: str, req: "ChatRequest | EmbeddingRequest | str") -> str:
    blob = json.dumps({"kind": kind, "request": canonical_request(req)}, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


# -- retry ------------------------------------------------------------------

T = TypeVar("T")


def with_retry(
    fn: Callable[[], T],
    attempts: int = 3,
    base_delay: float = 1.0,
    sleep: Callable[[float], None] = time.sleep,
) -> T:
    """Run ``fn``, retrying TransportError with exponential backoff."""
    for attempt in range(attempts):
        try:
            return fn()
        except MissingFixture:
            raise
        except TransportError as exc:
            if attempt == attempts - 1:
                raise
            delay = base_delay * (2**attempt)
            log.warning("transport error (%s), retry %d/%d in %.1fs", exc, attempt + 1, attempts - 1, delay)
            sleep(delay)
    raise AssertionError("unreachable")


class RetryingChat:
    def __init__(self, inner: ChatBackend, attempts: int = 3, base_delay: float = 1.0, sleep=time.sleep):
        self.inner = inner
        self.attempts = attempts
        self.base_delay = base_delay
        self.sleep = sleep

    def chat(self, req: ChatRequest) -> str:
        return with_retry(lambda: self.inner.chat(req), self.attempts, self.base_delay, self.sleep)
