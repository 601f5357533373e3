"""Candidate retrieval: search, keep the first N usable videos per query, download."""

from __future__ import annotations

import hashlib
import json
import logging
import re
import threading
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence
from urllib.parse import parse_qsl, urlencode, urlsplit, urlunsplit

from ._locks import named_lock
from .backends import Backends, SearchResult
from .errors import AllCandidatesFailed, InvalidValue, MediaToolFailure, Truncated, Unreachable, UnparseableUrl
from .model import VideoAsset

log = logging.getLogger(__name__)

_YT_HOSTS = {"youtube.com", "m.youtube.com", "music.youtube.com", "youtube-nocookie.com"}
_YT_ID = re.compile(r"^[A-Za-z0-9_-]{6,}$")
_TRACKING = {"si", "feature", "fbclid", "gclid", "igshid", "ref", "ref_src", "pp", "ab_channel"}


def _youtube_id(host: str, path: str, query: dict) -> Optional[str]:
    if host == "youtu.be":
        vid = path.strip("/").split("/")[0]
    elif host in _YT_HOSTS:
        if path.rstrip("/") == "/watch":
            vid = query.get("v", "")
        else:
            m = re.match(r"^/(?:shorts|embed|live|v)/([^/?#]+)", path)
            vid = m.group(1) if m else ""
    else:
        return None
    return vid if _YT_ID.match(vid) else None


def canonicalize(url: str) -> str:
    """Stable form of ``url`` used as the dedup and cache key."""
    text = url.strip()
    if not text or any(c.isspace() for c in text):
        raise UnparseableUrl(f"not a URL: {url!r}")
    if "://" not in text:
        head = text.split("/", 1)[0]
        if "." not in head:
            raise UnparseableUrl(f"not a URL: {url!r}")
        text = "https://" + text
    parts = urlsplit(text)
    scheme = parts.scheme.lower()
    if scheme not in ("http", "https") or not parts.hostname:
        raise UnparseableUrl(f"not an http(s) URL: {url!r}")
    host = parts.hostname.lower()
    if host.startswith("www."):
        host = host[4:]
    pairs = parse_qsl(parts.query, keep_blank_values=True)
    vid = _youtube_id(host, parts.path, dict(pairs))
    if vid:
        return f"https://www.youtube.com/watch?v={vid}"
    kept = sorted((k, v) for k, v in pairs if k.lower() not in _TRACKING and not k.lower().startswith("utm_"))
    port = parts.port
    netloc = host if port in (None, 80, 443) else f"{host}:{port}"
    path = parts.path or "/"
    return urlunsplit(("https" if scheme in ("http", "https") else scheme, netloc, path, urlencode(kept), ""))


# -- cache -------------------------------------------------------------------

PROBE_FILE = "probe.json"


class VideoCache:
    """``{root}/videos/{sha256(canonical_url)}/video.<ext>`` plus ``probe.json``."""

    def __init__(self, root: "str | Path"):
        self.root = Path(root)

    def dir_for(self, canonical_url: str) -> Path:
        return self.root / "videos" / hashlib.sha256(canonical_url.encode("utf-8")).hexdigest()

    def lookup(self, canonical_url: str) -> Optional[VideoAsset]:
        probe_path = self.dir_for(canonical_url) / PROBE_FILE
        if not probe_path.is_file():
            return None
        try:
            meta = json.loads(probe_path.read_text())
            video = probe_path.parent / meta["file"]
            if not video.is_file() or video.stat().st_size != meta["content_length"]:
                return None
            return VideoAsset(
                url=meta["url"],
                local_path=str(video),
                duration_s=float(meta["duration_s"]),
                width=int(meta["width"]),
                height=int(meta["height"]),
                probe_ok=True,
            )
        except (KeyError, ValueError, TypeError, json.JSONDecodeError):
            return None

    def store(self, canonical_url: str, video: Path, duration_s: float, width: int, height: int) -> VideoAsset:
        meta = {
            "url": canonical_url,
            "file": video.name,
            "content_length": video.stat().st_size,
            "duration_s": duration_s,
            "width": width,
            "height": height,
        }
        tmp = video.parent / (PROBE_FILE + ".tmp")
        tmp.write_text(json.dumps(meta, indent=1))
        tmp.replace(video.parent / PROBE_FILE)
        return VideoAsset(canonical_url, str(video), duration_s, width, height, True)


def cache_lookup(url: str, cache: VideoCache) -> Optional[VideoAsset]:
    return cache.lookup(canonicalize(url))


class HostLimiter:
    """Caps concurrent downloads per host."""

    def __init__(self, per_host: int = 2):
        self.per_host = per_host
        self._lock = threading.Lock()
        self._sems: dict[str, threading.Semaphore] = {}

    def for_url(self, url: str) -> threading.Semaphore:
        host = urlsplit(url).hostname or ""
        with self._lock:
            if host not in self._sems:
                self._sems[host] = threading.Semaphore(self.per_host)
            return self._sems[host]


_DEFAULT_LIMITER = HostLimiter()


@dataclass(frozen=True)
class CandidateSet:
    per_query: dict = field(default_factory=dict)
    merged: tuple[VideoAsset, ...] = ()
    dropped: tuple[tuple[str, str], ...] = ()
    attempts: int = 0


def _discard_partial(dest: Path) -> None:
    if dest.is_dir():
        for p in dest.glob("video.*"):
            p.unlink(missing_ok=True)


def _download(url: str, canonical: str, backends: Backends, cache: VideoCache, limiter: HostLimiter) -> VideoAsset:
    """Probe, fetch and verify one URL. Raises Unreachable/Truncated."""
    backends.fetcher.probe(url)
    dest = cache.dir_for(canonical)
    with limiter.for_url(canonical):
        try:
            video = Path(backends.fetcher.fetch(url, dest))
        except (Unreachable, Truncated):
            _discard_partial(dest)
            raise
    # unplayable bytes stay on disk without probe.json: never a cache hit,
    # but a replay can re-verify them and reach the same verdict
    try:
        info = backends.media.probe(video)
    except MediaToolFailure as exc:
        raise Truncated(url, f"unplayable download: {str(exc).splitlines()[0]}") from exc
    if not info.duration_s > 0 or not info.has_video:
        raise Truncated(url, "download has no playable video stream")
    return cache.store(canonical, video, info.duration_s, info.width, info.height)


def retrieve(
    queries: Sequence[str],
    n: int,
    backends: Backends,
    cache: VideoCache,
    budget: Optional[int] = None,
    limiter: HostLimiter = _DEFAULT_LIMITER,
    search_workers: int = 4,
) -> CandidateSet:
    """Walk each query's results in rank order until ``n`` videos survive.

    Searches run concurrently; the walk itself is sequential so the merged
    order depends only on query order and ranks. ``budget`` caps download
    attempts (cache hits are free) and defaults to ``len(queries) * n + 4``.
    """
    if not queries:
        raise InvalidValue("need at least one query")
    if n < 1:
        raise InvalidValue("N must be at least 1")
    budget = len(queries) * n + 4 if budget is None else budget

    with ThreadPoolExecutor(max_workers=max(1, min(search_workers, len(queries)))) as pool:
        results: list[SearchResult] = list(pool.map(backends.search.search, queries))

    per_query: dict[str, list[str]] = defaultdict(list)
    merged: list[VideoAsset] = []
    survivors: dict[str, VideoAsset] = {}
    dropped: dict[str, str] = {}
    attempts = 0
    exhausted = False
    for query, result in zip(queries, results):
        kept = per_query[query]
        for url in result.urls:
            if len(kept) >= n:
                break
            try:
                canonical = canonicalize(url)
            except UnparseableUrl:
                dropped.setdefault(url, "unparseable")
                continue
            if canonical in dropped or canonical in kept:
                continue
            if canonical in survivors:
                kept.append(canonical)
                continue
            with named_lock(str(cache.dir_for(canonical))):
                asset = cache.lookup(canonical)
                if asset is None and attempts < budget:
                    attempts += 1
                    try:
                        asset = _download(url, canonical, backends, cache, limiter)
                    except Unreachable as exc:
                        dropped[canonical] = f"unreachable: {exc}"
                        continue
                    except Truncated as exc:
                        dropped[canonical] = f"truncated: {exc}"
                        continue
            if asset is None:
                exhausted = True
                break
            survivors[canonical] = asset
            merged.append(asset)
            kept.append(canonical)
        if exhausted:
            log.warning("download budget of %d attempts exhausted", budget)
            break

    cs = CandidateSet(
        per_query={q: tuple(per_query.get(q, ())) for q in queries},
        merged=tuple(merged),
        dropped=tuple(dropped.items()),
        attempts=attempts,
    )
    if not merged:
        err = AllCandidatesFailed(f"no usable video among {sum(len(r.urls) for r in results)} results")
        err.candidates = cs
        raise err
    return cs
