"""Command-line entry point.

Exit codes: 0 success, 1 pipeline failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import random
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .config import PipelineConfig, make_backends
from .errors import InvalidValue, ShotSeekError
from .model import TASK_ORDER, ConstraintKind, ShotQuery, VideoAsset

log = logging.getLogger("shotseek")


class UsageError(Exception):
    pass


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=1, ensure_ascii=False, sort_keys=True) + "\n")


def _load_config(args) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    if args.seed is not None:
        cfg = cfg.with_(seed=args.seed)
    return cfg


def _query(args) -> ShotQuery:
    kind = ConstraintKind.parse(args.kind)
    return ShotQuery(args.description, kind, args.constraint if kind is not ConstraintKind.SHOT else None)


def _probe_local(path: str, media) -> VideoAsset:
    info = media.probe(path)
    return VideoAsset(Path(path).resolve().as_uri(), str(Path(path).resolve()), info.duration_s, info.width, info.height, True)


class Context:
    def __init__(self, args):
        self.args = args
        self.workdir = Path(args.workdir)
        self.config = _load_config(args)
        self._backends = None
        self.journal = None

    @property
    def backends(self):
        if self._backends is None:
            self._backends, self.journal = make_backends(
                self.config, self.workdir, replay=self.args.replay, record=self.args.record
            )
        return self._backends

    @property
    def cache(self):
        from .retriever import VideoCache

        return VideoCache(self.workdir / self.config.cache_dir)

    def journal_stats(self) -> Optional[dict]:
        if self.journal is None:
            return None
        j = self.journal
        return {"hits": dict(j.hits), "misses": dict(j.misses), "live_calls": dict(j.live_calls)}


# -- commands ------------------------------------------------------------------------


def cmd_expand(ctx: Context) -> int:
    from .generator import expand

    res = expand(_query(ctx.args), ctx.args.m or ctx.config.m, ctx.backends.chat, ctx.config.models["generator"])
    _emit({"think": res.think, "queries": list(res.queries)})
    return 0


def cmd_search(ctx: Context) -> int:
    res = ctx.backends.search.search(ctx.args.query)
    _emit({"query": res.query, "outbound_query": res.outbound_query, "urls": list(res.urls)})
    return 0


def cmd_fetch(ctx: Context) -> int:
    from .retriever import retrieve

    # a one-URL "search" keeps download, verification and caching in one place
    class _One:
        def search(self, q):
            from .backends import SearchResult

            return SearchResult(q, (ctx.args.url,), q)

    b = ctx.backends
    from .backends import Backends

    cs = retrieve([ctx.args.url], 1, Backends(b.chat, b.embed, _One(), b.fetcher, b.media), ctx.cache)
    _emit(cs.merged[0].to_dict())
    return 0


def _policy(ctx: Context):
    from .sampler import SamplingPolicy

    return SamplingPolicy.from_notation(ctx.args.policy) if ctx.args.policy else ctx.config.policy


def cmd_sample(ctx: Context) -> int:
    from .backends.media import FFmpegMedia
    from .sampler import sample

    media = FFmpegMedia()
    video = _probe_local(ctx.args.video, media)
    grid = sample(video, _policy(ctx), ctx.args.audio, media, num_frames=ctx.args.frames)
    _emit(grid.to_dict())
    return 0


def cmd_localize(ctx: Context) -> int:
    from .localizer import localize

    b = ctx.backends
    video = _probe_local(ctx.args.video, b.media)
    mode = ctx.args.mode or ctx.config.parse_mode
    out = localize(_query(ctx.args), video, _policy(ctx), b, mode, ctx.config.models["localizer"])
    _emit(out.to_dict())
    return 0 if out.error is None else 1


def cmd_judge(ctx: Context) -> int:
    from .judge import clip_score, verify

    b = ctx.backends
    if ctx.args.clip:
        s = clip_score(ctx.args.gt, ctx.args.selected, b.embed, description=ctx.args.text_image and ctx.args.description)
        _emit({"score": s, "matched": s >= ctx.config.clip_eval, "threshold": ctx.config.clip_eval})
        return 0
    v = verify(_query(ctx.args), ctx.args.gt, ctx.args.selected, b.chat, ctx.config.models["judge"])
    _emit(v.to_dict())
    return 0


def _run_id(ctx: Context) -> str:
    return ctx.args.run_id or time.strftime("run-%Y%m%d-%H%M%S", time.gmtime()) + f"-{time.time_ns() % 10**6:06d}"


def _finish_run(ctx: Context, run_dir: Path) -> int:
    stats = ctx.journal_stats()
    if stats is not None:
        (run_dir / "journal_stats.json").write_text(json.dumps(stats, indent=1, sort_keys=True) + "\n")
        if ctx.args.replay and sum(stats["misses"].values()):
            log.error("replay journal is missing %d fixtures", sum(stats["misses"].values()))
            return 1
    return 0


def cmd_run(ctx: Context) -> int:
    from .scoring import SampleSet, run_benchmark, score, write_run

    samples = SampleSet.load(ctx.args.samples)
    records = run_benchmark(samples, ctx.config, ctx.backends, ctx.cache)
    report = score(records, samples.tasks, label=ctx.config.label)
    run_dir = write_run(ctx.workdir / "runs" / _run_id(ctx), report, records, ctx.config)
    _emit({"run_dir": str(run_dir), **report.display()})
    return _finish_run(ctx, run_dir)


def cmd_score(ctx: Context) -> int:
    from .scoring import load_records, score

    records = load_records(ctx.args.run_dir)
    if not records:
        raise UsageError(f"no traces under {ctx.args.run_dir}")
    report = score(records)
    if ctx.args.write:
        (Path(ctx.args.run_dir) / "report.json").write_text(report.to_json(), encoding="utf-8")
    _emit(report.display())
    return 0


def cmd_ablate(ctx: Context) -> int:
    from .scoring import SampleSet, grid_presets, run_benchmark, score, write_run

    samples = SampleSet.load(ctx.args.samples)
    base = ctx.workdir / "runs" / _run_id(ctx)
    rows = []
    for i, cfg in enumerate(grid_presets(ctx.config, ctx.args.grid)):
        records = run_benchmark(samples, cfg, ctx.backends, ctx.cache)
        report = score(records, samples.tasks, label=cfg.label)
        write_run(base / f"{i:02d}", report, records, cfg)
        rows.append({"config": cfg.label, **report.display()})
    base.mkdir(parents=True, exist_ok=True)
    (base / "ablation.json").write_text(json.dumps(rows, indent=1) + "\n", encoding="utf-8")
    _emit(rows)
    return _finish_run(ctx, base)


def cmd_bench_quotas(ctx: Context) -> int:
    from .benchkit import plan_quotas

    tasks = TASK_ORDER if ctx.args.task == "all" else (ConstraintKind.parse(ctx.args.task),)
    plans = [plan_quotas(t, ctx.args.total).to_dict() for t in tasks]
    _emit({"plans": plans, "total": sum(p["total"] for p in plans)})
    return 0


def cmd_bench_validate(ctx: Context) -> int:
    from .benchkit import validate_record

    worst = 0
    results = {}
    for f in ctx.args.records:
        rep = validate_record(Path(f).read_text(encoding="utf-8"))
        results[f] = rep.to_dict()
        worst = max(worst, {"pass": 0, "warn": 0, "fail": 1}[rep.status])
    _emit(results)
    return worst


def cmd_bench_build(ctx: Context) -> int:
    from .benchkit import diverse_bundle, draft_record

    b = ctx.backends
    video = _probe_local(ctx.args.video, b.media)
    if ctx.args.url:
        video = VideoAsset(ctx.args.url, video.local_path, video.duration_s, video.width, video.height, True)
    out = Path(ctx.args.out)
    rng = random.Random(ctx.config.seed)
    bundle = diverse_bundle(video, b.media, b.embed, out, rng, pairs=ctx.args.pairs)
    if bundle is None:
        log.error("no sufficiently varied window found")
        return 1
    result = {"bundle": bundle.meta}
    if not ctx.args.no_record:
        draft = draft_record(
            bundle, b.chat, record_id=ctx.args.id, video_link=video.url, category=ctx.args.category,
            timestamp=ctx.args.timestamp, bundle_dir=out,
        )  # fmt: skip
        if draft.record is not None:
            (out / "record.json").write_text(json.dumps(draft.record, indent=1, ensure_ascii=False) + "\n")
        result["validation"] = draft.report.to_dict()
    _emit(result)
    return 0


def cmd_bench_mini(ctx: Context) -> int:
    from .minibench import build_minibench

    root = build_minibench(ctx.workdir / "minibench")
    _emit({"root": str(root), "samples": str(root / "samples.json"), "config": str(root / "config.json")})
    return 0


# -- parser ----------------------------------------------------------------------------


def _add_query_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--description", required=True)
    p.add_argument("--kind", default="Shot", choices=[k.value for k in ConstraintKind])
    p.add_argument("--constraint")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="shotseek", description="Open-domain video shot retrieval harness.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--config", help="pipeline config JSON")
    p.add_argument("--replay", metavar="DIR", help="answer external calls from a recorded journal")
    p.add_argument("--record", metavar="DIR", help="record external calls to a journal")
    p.add_argument("--seed", type=int)
    p.add_argument("--workdir", default=".", help="root for cache/ and runs/")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("expand", help="generate search queries for a description")
    _add_query_args(s)
    s.add_argument("-m", type=int)
    s.set_defaults(func=cmd_expand)

    s = sub.add_parser("search", help="run one search query")
    s.add_argument("query")
    s.set_defaults(func=cmd_search)

    s = sub.add_parser("fetch", help="download a URL into the video cache")
    s.add_argument("url")
    s.set_defaults(func=cmd_fetch)

    s = sub.add_parser("sample", help="extract the frame grid of a local video")
    s.add_argument("video")
    s.add_argument("--frames", type=int)
    s.add_argument("--policy", help="X-Y-Z tiers or a flat count")
    s.add_argument("--audio", action="store_true")
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("localize", help="pick the best-matching frame of a local video")
    s.add_argument("video")
    _add_query_args(s)
    s.add_argument("--policy")
    s.add_argument("--mode", choices=["strict", "permissive"])
    s.set_defaults(func=cmd_localize)

    s = sub.add_parser("judge", help="verify a selected frame against the ground truth")
    s.add_argument("gt")
    s.add_argument("selected")
    _add_query_args(s)
    s.add_argument("--clip", action="store_true", help="embedding cosine instead of a judge model")
    s.add_argument("--text-image", action="store_true", help="with --clip, compare against the description")
    s.set_defaults(func=cmd_judge)

    s = sub.add_parser("run", help="run the pipeline over a samples file")
    s.add_argument("samples")
    s.add_argument("--run-id")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("score", help="re-score the traces of a finished run")
    s.add_argument("run_dir")
    s.add_argument("--write", action="store_true", help="rewrite report.json")
    s.set_defaults(func=cmd_score)

    s = sub.add_parser("ablate", help="run a grid of configurations")
    s.add_argument("samples")
    s.add_argument("--grid", default="queries", help="queries | urls | comma list of X-Y-Z policies")
    s.add_argument("--run-id")
    s.set_defaults(func=cmd_ablate)

    bench = sub.add_parser("bench", help="benchmark construction tools")
    bsub = bench.add_subparsers(dest="bench_command", required=True)

    s = bsub.add_parser("quotas", help="per-topic sample quotas")
    s.add_argument("task", nargs="?", default="all")
    s.add_argument("--total", type=int)
    s.set_defaults(func=cmd_bench_quotas)

    s = bsub.add_parser("validate", help="check record JSON files")
    s.add_argument("records", nargs="+")
    s.set_defaults(func=cmd_bench_validate)

    s = bsub.add_parser("build", help="extract a window bundle and draft its record")
    s.add_argument("video")
    s.add_argument("--out", required=True)
    s.add_argument("--id", default="record")
    s.add_argument("--url")
    s.add_argument("--category", default="Knowledge")
    s.add_argument("--timestamp", default="1970-01-01 00:00:00")
    s.add_argument("--pairs", choices=["adjacent", "all"], default="adjacent")
    s.add_argument("--no-record", action="store_true", help="stop after the bundle")
    s.set_defaults(func=cmd_bench_build)

    s = bsub.add_parser("mini", help="synthesize the offline mini-benchmark under WORKDIR/minibench")
    s.set_defaults(func=cmd_bench_mini)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(Context(args))
    except (UsageError, InvalidValue, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"shotseek: error: {exc}", file=sys.stderr)
        return 2
    except ShotSeekError as exc:
        print(f"shotseek: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
