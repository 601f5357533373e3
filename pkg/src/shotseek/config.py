"""Pipeline configuration and backend construction."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Optional

from .backends import Backends, Journal, RetryingChat, recording, replaying
from .errors import InvalidValue
from .localizer import ParseMode
from .sampler import SamplingPolicy

DEFAULT_MODELS = {"generator": "generator", "localizer": "localizer", "judge": "judge"}

# fields that only say where things live; they do not change results
_PATH_FIELDS = {"cache_dir", "backends", "workers"}


@dataclass(frozen=True)
class PipelineConfig:
    m: int = 2
    n: int = 2
    policy: SamplingPolicy = field(default_factory=SamplingPolicy)
    parse_mode: ParseMode = ParseMode.STRICT
    models: Mapping[str, str] = field(default_factory=lambda: dict(DEFAULT_MODELS))
    clip_eval: float = 0.7
    reasks: int = 2
    retries: int = 3
    seed: int = 0
    language: str = "en"
    temporal_context: str = "both"
    download_budget: Optional[int] = None
    workers: int = 4
    cache_dir: str = "cache"
    backends: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise InvalidValue("M and N must be at least 1")
        if self.workers < 1:
            raise InvalidValue("workers must be at least 1")
        if self.language not in ("en", "ch"):
            raise InvalidValue(f"unknown language {self.language!r}")
        if self.temporal_context not in ("both", "before", "after"):
            raise InvalidValue(f"unknown temporal context {self.temporal_context!r}")
        missing = set(DEFAULT_MODELS) - set(self.models)
        if missing:
            raise InvalidValue(f"models missing roles: {sorted(missing)}")
        object.__setattr__(self, "parse_mode", ParseMode(self.parse_mode))

    @classmethod
    def closed_source(cls, **kw) -> "PipelineConfig":
        return cls(policy=SamplingPolicy.closed_source(), **kw)

    @classmethod
    def open_source(cls, **kw) -> "PipelineConfig":
        return cls(policy=SamplingPolicy.open_source(), **kw)

    def with_(self, **changes) -> "PipelineConfig":
        return replace(self, **changes)

    @property
    def label(self) -> str:
        return f"M{self.m}xN{self.n} frames {self.policy.notation}"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["policy"] = self.policy.to_dict()
        d["parse_mode"] = self.parse_mode.value
        d["models"] = dict(self.models)
        d["backends"] = dict(self.backends)
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "PipelineConfig":
        d = dict(d)
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidValue(f"unknown config keys: {sorted(unknown)}")
        policy = d.get("policy")
        if isinstance(policy, str):
            d["policy"] = SamplingPolicy.from_notation(policy)
        elif isinstance(policy, Mapping):
            d["policy"] = SamplingPolicy.from_dict(policy)
        if "models" in d:
            d["models"] = {**DEFAULT_MODELS, **d["models"]}
        return cls(**d)

    @classmethod
    def load(cls, path: "str | Path") -> "PipelineConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def fingerprint(self) -> str:
        d = {k: v for k, v in self.to_dict().items() if k not in _PATH_FIELDS}
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


# -- backend construction ------------------------------------------------------


def _build_chat(spec: Mapping[str, Any]):
    kind = spec.get("type", "openai")
    if kind == "openai":
        from .backends.http import OpenAICompatibleChat

        chat = OpenAICompatibleChat(spec["base_url"], api_key_env=spec.get("api_key_env", "OPENAI_API_KEY"))
        return RetryingChat(chat, attempts=int(spec.get("attempts", 3)))
    if kind == "echo":
        from .backends.mock import EchoChat

        return EchoChat()
    raise InvalidValue(f"unknown chat backend {kind!r}")


def _build_embed(spec: Mapping[str, Any]):
    kind = spec.get("type", "openai")
    if kind == "openai":
        from .backends.http import OpenAICompatibleEmbedder

        return OpenAICompatibleEmbedder(spec["base_url"], api_key_env=spec.get("api_key_env", "OPENAI_API_KEY"))
    if kind == "hash":
        from .backends.mock import HashEmbedder

        return HashEmbedder(int(spec.get("dim", 8)))
    raise InvalidValue(f"unknown embedding backend {kind!r}")


def _build_search(spec: Mapping[str, Any]):
    from .backends.commands import YTDLP_SEARCH, CommandSearch

    if spec.get("type", "command") != "command":
        raise InvalidValue(f"unknown search backend {spec.get('type')!r}")
    return CommandSearch(tuple(spec.get("template", YTDLP_SEARCH)), int(spec.get("max_results", 10)))


def _build_fetcher(spec: Mapping[str, Any]):
    from .backends.commands import YTDLP_FETCH, YTDLP_PROBE, CommandFetcher

    if spec.get("type", "command") != "command":
        raise InvalidValue(f"unknown fetcher backend {spec.get('type')!r}")
    return CommandFetcher(tuple(spec.get("fetch", YTDLP_FETCH)), tuple(spec.get("probe", YTDLP_PROBE)))


def live_backends(config: PipelineConfig, workdir: Path) -> Backends:
    from .backends.media import FFmpegMedia

    specs = dict(config.backends)
    if specs.get("type") == "minibench":
        from .minibench import minibench_backends

        return minibench_backends(workdir / specs.get("root", "minibench"))
    media = FFmpegMedia(specs.get("media", {}).get("ffmpeg"))
    return Backends(
        chat=_build_chat(specs["chat"]) if "chat" in specs else None,
        embed=_build_embed(specs["embed"]) if "embed" in specs else None,
        search=_build_search(specs.get("search", {})),
        fetcher=_build_fetcher(specs.get("fetcher", {})),
        media=media,
    )


def make_backends(
    config: PipelineConfig,
    workdir: "str | Path",
    replay: "str | Path | None" = None,
    record: "str | Path | None" = None,
) -> tuple[Backends, Optional[Journal]]:
    """Live, recording or replaying backends. Replay never constructs live clients."""
    workdir = Path(workdir)
    if replay is not None and record is not None:
        raise InvalidValue("--replay and --record are mutually exclusive")
    if replay is not None:
        from .backends.media import FFmpegMedia

        journal = Journal(replay)
        return replaying(journal, FFmpegMedia()), journal
    live = live_backends(config, workdir)
    if record is not None:
        journal = Journal(record)
        return recording(live, journal), journal
    return live, None
