"""Append-only call journal with recording and replaying backend wrappers.

Journal lines are JSON objects ``{"request_hash", "kind", "response"}``.
A recorded journal replays with zero live calls.
"""

from __future__ import annotations

import json
import logging
import os
import threading
from collections import Counter
from pathlib import Path
from typing import Any, Callable, Optional

from ..errors import ContextOverflow, MissingFixture, ModelRefusal, Truncated, Unreachable
from .base import (
    ChatBackend,
    ChatRequest,
    EmbeddingBackend,
    EmbeddingRequest,
    SearchBackend,
    SearchResult,
    VideoFetcher,
    request_hash,
)

log = logging.getLogger(__name__)

JOURNAL_NAME = "journal.jsonl"


class Journal:
    def __init__(self, path: "str | Path"):
        path = Path(path)
        if path.is_dir() or path.suffix == "":
            path = path / JOURNAL_NAME
        self.path = path
        self._lock = threading.Lock()
        self._entries: dict[str, dict] = {}
        self.hits: Counter = Counter()
        self.misses: Counter = Counter()
        self.live_calls: Counter = Counter()
        if self.path.exists():
            self._load()

    def _load(self) -> None:
        with open(self.path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    entry = json.loads(line)
                except json.JSONDecodeError:
                    # a torn final line from an interrupted writer
                    log.warning("%s:%d: skipping unreadable journal line", self.path, lineno)
                    continue
                self._entries.setdefault(entry["request_hash"], entry)

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, h: str) -> bool:
        return h in self._entries

    def lookup(self, kind: str, h: str) -> Any:
        with self._lock:
            entry = self._entries.get(h)
            if entry is None or entry["kind"] != kind:
                self.misses[kind] += 1
                raise MissingFixture(kind, h)
            self.hits[kind] += 1
            return entry["response"]

    def append(self, kind: str, h: str, response: Any) -> None:
        entry = {"request_hash": h, "kind": kind, "response": response}
        line = (json.dumps(entry, ensure_ascii=False, sort_keys=True) + "\n").encode("utf-8")
        with self._lock:
            self.live_calls[kind] += 1
            if h in self._entries:
                return
            self._entries[h] = entry
            self.path.parent.mkdir(parents=True, exist_ok=True)
            # single write() on an O_APPEND fd keeps lines whole across writers
            fd = os.open(self.path, os.O_WRONLY | os.O_CREAT | os.O_APPEND, 0o644)
            try:
                os.write(fd, line)
                os.fsync(fd)
            finally:
                os.close(fd)

    @property
    def total_live_calls(self) -> int:
        return sum(self.live_calls.values())


# Deterministic failures are journaled so replays take the same branch.
# Plain TransportError is transient and never recorded.
_REPLAYABLE = {cls.__name__: cls for cls in (ContextOverflow, ModelRefusal, Unreachable, Truncated)}


def _encode_error(exc: Exception) -> dict:
    if isinstance(exc, (Unreachable, Truncated)):
        return {"__error__": type(exc).__name__, "url": exc.url, "message": str(exc)}
    return {"__error__": type(exc).__name__, "message": str(exc)}


def _raise_if_error(response: Any) -> Any:
    if isinstance(response, dict) and "__error__" in response:
        cls = _REPLAYABLE[response["__error__"]]
        if cls in (Unreachable, Truncated):
            exc = cls(response["url"])
            exc.args = (response["message"],)
            raise exc
        raise cls(response["message"])
    return response


def _recorded(journal: Journal, kind: str, h: str, call: Callable[[], Any], encode=lambda x: x) -> Any:
    try:
        out = call()
    except tuple(_REPLAYABLE.values()) as exc:
        journal.append(kind, h, _encode_error(exc))
        raise
    journal.append(kind, h, encode(out))
    return out


class RecordingChat:
    def __init__(self, inner: ChatBackend, journal: Journal):
        self.inner = inner
        self.journal = journal

    def chat(self, req: ChatRequest) -> str:
        return _recorded(self.journal, "chat", request_hash("chat", req), lambda: self.inner.chat(req))


class RecordingEmbedder:
    def __init__(self, inner: EmbeddingBackend, journal: Journal):
        self.inner = inner
        self.journal = journal

    def embed(self, req: EmbeddingRequest) -> list[float]:
        return _recorded(
            self.journal,
            "embed",
            request_hash("embed", req),
            lambda: [float(x) for x in self.inner.embed(req)],
        )


class RecordingSearch:
    def __init__(self, inner: SearchBackend, journal: Journal):
        self.inner = inner
        self.journal = journal

    def search(self, query: str) -> SearchResult:
        return _recorded(
            self.journal,
            "search",
            request_hash("search", query),
            lambda: self.inner.search(query),
            lambda res: {"urls": list(res.urls), "outbound_query": res.outbound_query},
        )


class RecordingFetcher:
    """Journals probes and fetch outcomes. Video bytes live in the cache, not the journal."""

    def __init__(self, inner: VideoFetcher, journal: Journal):
        self.inner = inner
        self.journal = journal

    def probe(self, url: str) -> dict:
        return _recorded(self.journal, "probe", request_hash("probe", url), lambda: self.inner.probe(url))

    def fetch(self, url: str, dest: Path) -> Path:
        return _recorded(
            self.journal,
            "fetch",
            request_hash("fetch", url),
            lambda: Path(self.inner.fetch(url, dest)),
            lambda p: {"file": p.name},
        )


class ReplayChat:
    def __init__(self, journal: Journal):
        self.journal = journal

    def chat(self, req: ChatRequest) -> str:
        return _raise_if_error(self.journal.lookup("chat", request_hash("chat", req)))


class ReplayEmbedder:
    def __init__(self, journal: Journal):
        self.journal = journal

    def embed(self, req: EmbeddingRequest) -> list[float]:
        return list(_raise_if_error(self.journal.lookup("embed", request_hash("embed", req))))


class ReplaySearch:
    def __init__(self, journal: Journal):
        self.journal = journal

    def search(self, query: str) -> SearchResult:
        resp = _raise_if_error(self.journal.lookup("search", request_hash("search", query)))
        return SearchResult(query, tuple(resp["urls"]), resp.get("outbound_query", ""))


class ReplayFetcher:
    """Replays probes and recorded fetch failures.

    Successful downloads are never replayed from the journal: the bytes
    must already sit in ``dest``, otherwise the fetch is a missing fixture.
    """

    def __init__(self, journal: Journal):
        self.journal = journal

    def probe(self, url: str) -> dict:
        return _raise_if_error(self.journal.lookup("probe", request_hash("probe", url)))

    def fetch(self, url: str, dest: Path) -> Path:
        h = request_hash("fetch", url)
        resp = _raise_if_error(self.journal.lookup("fetch", h))
        if isinstance(resp, dict) and "file" in resp:
            local = Path(dest) / resp["file"]
            if local.is_file():
                return local
        raise MissingFixture("fetch", h)


def recording(backends, journal: Journal):
    """Wrap the network-facing members of a Backends bundle with recorders."""
    from .base import Backends

    return Backends(
        chat=RecordingChat(backends.chat, journal) if backends.chat else None,
        embed=RecordingEmbedder(backends.embed, journal) if backends.embed else None,
        search=RecordingSearch(backends.search, journal) if backends.search else None,
        fetcher=RecordingFetcher(backends.fetcher, journal) if backends.fetcher else None,
        media=backends.media,
    )


def replaying(journal: Journal, media: Optional[object] = None):
    from .base import Backends

    return Backends(
        chat=ReplayChat(journal),
        embed=ReplayEmbedder(journal),
        search=ReplaySearch(journal),
        fetcher=ReplayFetcher(journal),
        media=media,
    )
