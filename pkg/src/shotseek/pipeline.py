"""One sample end to end: expand, retrieve, then localize and verify each candidate."""

from __future__ import annotations

import logging
import time
from pathlib import Path
from typing import Optional

from .backends import Backends
from .config import PipelineConfig
from .errors import AgentOutputError, AllCandidatesFailed, BackendError, InvalidValue, UnparseableVerdict
from .generator import expand
from .judge import verify
from .localizer import localize
from .model import (
    BenchmarkSample,
    ConstraintKind,
    FinalResult,
    LocalizationOutcome,
    RunRecord,
    ShotQuery,
    Verdict,
    query_from_sample,
)
from .retriever import VideoCache, retrieve

log = logging.getLogger(__name__)

NO_FRAME = "no frame selected; judge not consulted"


def ground_truth_frame(sample: BenchmarkSample, root: "str | Path | None" = None) -> Path:
    if sample.asset_paths is None:
        raise InvalidValue(f"sample {sample.id} has no asset paths")
    p = Path(sample.asset_paths.target_frame)
    if not p.is_absolute() and root is not None:
        p = Path(root) / p
    if not p.is_file():
        raise InvalidValue(f"sample {sample.id}: ground-truth frame {p} is missing")
    return p


def _judge(q: ShotQuery, gt: Path, outcome: LocalizationOutcome, config: PipelineConfig, backends: Backends) -> Verdict:
    judge_model = config.models["judge"]
    if not outcome.matched:
        return Verdict(False, judge_model, NO_FRAME)
    try:
        return verify(q, gt, outcome.frame_path, backends.chat, judge_model, config.reasks)
    except (UnparseableVerdict, BackendError) as exc:
        return Verdict(False, judge_model, f"judge failed: {type(exc).__name__}: {exc}")


def run_sample(
    sample: BenchmarkSample,
    kind: "ConstraintKind | str",
    config: PipelineConfig,
    backends: Backends,
    cache: VideoCache,
    assets_root: "str | Path | None" = None,
    clock=time.perf_counter,
) -> RunRecord:
    """Run the three stages for one sample.

    Candidates are tried in merged order and the first verified match wins.
    Only a generator failure or an empty candidate list ends the sample
    early; per-candidate failures are recorded and the walk continues.
    """
    kind = ConstraintKind.parse(kind)
    q = query_from_sample(sample, kind, config.language, config.temporal_context)
    gt = ground_truth_frame(sample, assets_root)
    fp = config.fingerprint()
    timings: dict[str, float] = {}

    def failed(reason: str, queries=(), candidates=(), dropped=()) -> RunRecord:
        return RunRecord(
            sample.id, kind, tuple(queries), tuple(candidates), (), (),
            FinalResult(False, reason=reason), fp, tuple(dropped),
        ).with_timings(timings)  # fmt: skip

    t0 = clock()
    try:
        expansion = expand(q, config.m, backends.chat, config.models["generator"], config.reasks)
    except (AgentOutputError, BackendError) as exc:
        timings["expand"] = clock() - t0
        return failed(f"generator: {type(exc).__name__}: {exc}")
    timings["expand"] = clock() - t0

    t0 = clock()
    try:
        cands = retrieve(expansion.queries, config.n, backends, cache, config.download_budget)
    except AllCandidatesFailed as exc:
        timings["retrieve"] = clock() - t0
        cs = getattr(exc, "candidates", None)
        return failed(f"retriever: {exc}", expansion.queries, dropped=cs.dropped if cs else ())
    timings["retrieve"] = clock() - t0

    outcomes: list[LocalizationOutcome] = []
    verdicts: list[Verdict] = []
    final: Optional[FinalResult] = None
    t_loc = t_judge = 0.0
    for cand in cands.merged:
        t0 = clock()
        outcome = localize(
            q, cand, config.policy, backends, config.parse_mode, config.models["localizer"], config.reasks
        )
        t_loc += clock() - t0
        outcomes.append(outcome)
        t0 = clock()
        verdict = _judge(q, gt, outcome, config, backends)
        t_judge += clock() - t0
        verdicts.append(verdict)
        if verdict.matched:
            final = FinalResult(True, cand.url, outcome.frame_index)
            break
    timings["localize"] = t_loc
    timings["judge"] = t_judge
    if final is None:
        final = FinalResult(False, reason=f"none of {len(cands.merged)} candidates verified")
    return RunRecord(
        sample.id, kind, expansion.queries, cands.merged, tuple(outcomes), tuple(verdicts),
        final, fp, cands.dropped,
    ).with_timings(timings)  # fmt: skip
