"""Search and download backends that shell out to an external command.

The downloader interface is deliberately small: the command receives
``{url}`` and ``{dest}`` substitutions, must leave exactly one ``video.*``
file in ``dest``, and may print a JSON metadata object on stdout. Any
yt-dlp compatible tool satisfies it with the default templates.
"""

from __future__ import annotations

import json
import logging
import subprocess
from pathlib import Path
from typing import Optional, Sequence

from ..errors import InvalidValue, TransportError, Truncated, Unreachable
from .base import SearchResult

log = logging.getLogger(__name__)

DEFAULT_SUFFIX = "youtube"

YTDLP_SEARCH = ("yt-dlp", "--flat-playlist", "-J", "--no-warnings", "ytsearch{n}:{query}")
YTDLP_PROBE = ("yt-dlp", "-J", "--skip-download", "--no-playlist", "--no-warnings", "{url}")
YTDLP_FETCH = (
    "yt-dlp",
    "-f", "bv*[height<=1080]+ba/b[height<=1080]/b",
    "--merge-output-format", "mp4",
    "--no-playlist", "--no-part", "--no-warnings",
    "-o", "{dest}/video.%(ext)s",
    "--print-json",
    "{url}",
)  # fmt: skip


def with_suffix(query: str, suffix: str = DEFAULT_SUFFIX) -> str:
    """Append the platform token unless the query already ends with it."""
    query = query.strip()
    if not query:
        raise InvalidValue("search query must be non-empty")
    if not suffix or query.lower().split()[-1] == suffix.lower():
        return query
    return f"{query} {suffix}"


def _fill(template: Sequence[str], **values) -> list[str]:
    return [arg.format(**values) for arg in template]


def _run(argv: list[str], timeout: float) -> subprocess.CompletedProcess:
    log.debug("exec %s", argv)
    return subprocess.run(argv, capture_output=True, text=True, timeout=timeout)


class CommandSearch:
    def __init__(
        self,
        template: Sequence[str] = YTDLP_SEARCH,
        max_results: int = 10,
        suffix: str = DEFAULT_SUFFIX,
        timeout: float = 120.0,
    ):
        self.template = tuple(template)
        self.max_results = max_results
        self.suffix = suffix
        self.timeout = timeout

    def search(self, query: str) -> SearchResult:
        outbound = with_suffix(query, self.suffix)
        try:
            proc = _run(_fill(self.template, n=self.max_results, query=outbound), self.timeout)
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise TransportError(f"search command failed: {exc}") from exc
        if proc.returncode != 0:
            raise TransportError(f"search command exited {proc.returncode}: {proc.stderr[-500:]}")
        try:
            data = json.loads(proc.stdout or "{}")
        except json.JSONDecodeError as exc:
            raise TransportError("search command printed invalid JSON") from exc
        urls = []
        for entry in data.get("entries") or []:
            url = entry.get("webpage_url") or entry.get("url")
            if not url and entry.get("id"):
                url = f"https://www.youtube.com/watch?v={entry['id']}"
            if url:
                urls.append(url)
        return SearchResult(query, tuple(urls), outbound)


class CommandFetcher:
    def __init__(
        self,
        fetch_template: Sequence[str] = YTDLP_FETCH,
        probe_template: Optional[Sequence[str]] = YTDLP_PROBE,
        timeout: float = 1800.0,
    ):
        self.fetch_template = tuple(fetch_template)
        self.probe_template = tuple(probe_template) if probe_template else None
        self.timeout = timeout

    def probe(self, url: str) -> dict:
        if self.probe_template is None:
            return {}
        try:
            proc = _run(_fill(self.probe_template, url=url), self.timeout)
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise Unreachable(url, str(exc)) from exc
        if proc.returncode != 0:
            raise Unreachable(url, proc.stderr.strip()[-300:])
        try:
            meta = json.loads(proc.stdout or "{}")
        except json.JSONDecodeError:
            meta = {}
        keep = ("id", "title", "duration", "width", "height", "filesize", "filesize_approx")
        return {k: meta[k] for k in keep if k in meta}

    def fetch(self, url: str, dest: Path) -> Path:
        dest = Path(dest)
        dest.mkdir(parents=True, exist_ok=True)
        try:
            proc = _run(_fill(self.fetch_template, url=url, dest=str(dest)), self.timeout)
        except subprocess.TimeoutExpired as exc:
            raise Truncated(url, "download timed out") from exc
        except OSError as exc:
            raise Unreachable(url, str(exc)) from exc
        if proc.returncode != 0:
            raise Unreachable(url, proc.stderr.strip()[-300:])
        files = [p for p in dest.glob("video.*") if p.suffix not in (".part", ".json", ".ytdl")]
        if len(files) != 1:
            raise Truncated(url, f"expected one video file in {dest}, found {len(files)}")
        video = files[0]
        meta = {}
        for line in reversed(proc.stdout.strip().splitlines()):
            try:
                meta = json.loads(line)
                break
            except json.JSONDecodeError:
                continue
        expected = meta.get("filesize")
        if expected and video.stat().st_size != int(expected):
            raise Truncated(url, f"size {video.stat().st_size} != advertised {expected}")
        return video
