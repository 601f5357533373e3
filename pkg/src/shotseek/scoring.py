"""Accuracy reports, benchmark runs, ablation grids and the on-disk run store."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from .backends import Backends
from .config import PipelineConfig
from .errors import EmptyTask, InvalidValue
from .model import TASK_ORDER, BenchmarkSample, ConstraintKind, RunRecord
from .pipeline import run_sample
from .retriever import VideoCache
from .sampler import SamplingPolicy

log = logging.getLogger(__name__)


def average(per_task: Mapping) -> float:
    """Unweighted mean over the tasks that are present; absent tasks are skipped, not zero-filled."""
    values = [float(v) for v in per_task.values() if v is not None]
    if not values:
        raise EmptyTask("no task accuracies to average")
    return sum(values) / len(values)


@dataclass(frozen=True)
class Report:
    per_task: Mapping[ConstraintKind, float]
    average: float
    per_sample: tuple[dict, ...] = ()
    config_fingerprint: str = ""
    label: str = ""

    def display(self, digits: int = 1) -> dict:
        return {k.value: round(v, digits) for k, v in self.per_task.items()} | {"Avg": round(self.average, digits)}

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "config_fingerprint": self.config_fingerprint,
            "per_task": {k.value: v for k, v in self.per_task.items()},
            "average": self.average,
            "per_sample": [dict(s) for s in self.per_sample],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True, ensure_ascii=False) + "\n"


def score(
    records: Sequence[RunRecord],
    tasks: Optional[Mapping[str, "ConstraintKind | str"]] = None,
    expected: Iterable["ConstraintKind | str"] = (),
    label: str = "",
) -> Report:
    """Per-task accuracy as a percentage, plus the unweighted average.

    ``tasks`` maps sample id to task and overrides the kind stored on each
    record. Any task in ``expected`` with no records raises EmptyTask.
    """
    if not records:
        raise EmptyTask("no records to score")
    buckets: dict[ConstraintKind, list[bool]] = {}
    for r in records:
        kind = ConstraintKind.parse(tasks[r.sample_id]) if tasks is not None else r.task
        buckets.setdefault(kind, []).append(r.final.success)
    for k in expected:
        if ConstraintKind.parse(k) not in buckets:
            raise EmptyTask(f"task {ConstraintKind.parse(k).value} has no samples")
    per_task = {k: 100.0 * sum(buckets[k]) / len(buckets[k]) for k in TASK_ORDER if k in buckets}
    fps = {r.config_fingerprint for r in records}
    per_sample = tuple(
        {
            "sample_id": r.sample_id,
            "task": r.task.value,
            "success": r.final.success,
            "winning_candidate": r.final.winning_candidate,
            "winning_frame": r.final.winning_frame,
            "candidates": len(r.candidates),
            "verdicts": len(r.verdicts),
            "reason": r.final.reason,
        }
        for r in sorted(records, key=lambda r: r.sample_id)
    )
    return Report(per_task, average(per_task), per_sample, fps.pop() if len(fps) == 1 else "mixed", label)


# -- sample sets -----------------------------------------------------------------


@dataclass(frozen=True)
class SampleSet:
    """Samples tagged with their task; asset paths resolve against ``root``."""

    items: tuple[tuple[BenchmarkSample, ConstraintKind], ...]
    root: Path = field(default_factory=Path)

    @classmethod
    def load(cls, path: "str | Path") -> "SampleSet":
        path = Path(path)
        raw = json.loads(path.read_text(encoding="utf-8"))
        items = []
        for entry in raw:
            entry = dict(entry)
            task = entry.pop("task", None)
            if task is None:
                raise InvalidValue(f"sample {entry.get('id')} has no task")
            items.append((BenchmarkSample.from_dict(entry), ConstraintKind.parse(task)))
        return cls(tuple(items), path.parent)

    @property
    def tasks(self) -> dict[str, ConstraintKind]:
        return {s.id: k for s, k in self.items}


def run_benchmark(
    samples: SampleSet,
    config: PipelineConfig,
    backends: Backends,
    cache: VideoCache,
) -> list[RunRecord]:
    """Samples run concurrently up to ``config.workers``; output order follows input order."""

    def one(item):
        sample, kind = item
        return run_sample(sample, kind, config, backends, cache, samples.root)

    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        return list(pool.map(one, samples.items))


# -- ablation --------------------------------------------------------------------

QUERY_GRID = ((1, 2), (2, 2), (3, 2))
URL_GRID = ((2, 1), (2, 2), (2, 3))


def grid_presets(base: PipelineConfig, name: str) -> list[PipelineConfig]:
    """``queries`` varies M, ``urls`` varies N, anything else is a comma list of X-Y-Z policies."""
    if name == "queries":
        return [base.with_(m=m, n=n) for m, n in QUERY_GRID]
    if name == "urls":
        return [base.with_(m=m, n=n) for m, n in URL_GRID]
    return [base.with_(policy=SamplingPolicy.from_notation(x)) for x in name.split(",") if x.strip()]


def ablate(
    grid: Sequence[PipelineConfig],
    samples: SampleSet,
    backends: Backends,
    cache: VideoCache,
) -> list[Report]:
    reports = []
    for cfg in grid:
        records = run_benchmark(samples, cfg, backends, cache)
        reports.append(score(records, samples.tasks, label=cfg.label))
    return reports


# -- run store ---------------------------------------------------------------------


def write_run(run_dir: "str | Path", report: Report, records: Sequence[RunRecord], config: PipelineConfig) -> Path:
    """``report.json`` is timing-free so identical runs give identical bytes; traces keep timings."""
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "report.json").write_text(report.to_json(), encoding="utf-8")
    (run_dir / "config.json").write_text(json.dumps(config.to_dict(), indent=1, sort_keys=True), encoding="utf-8")
    for r in records:
        d = run_dir / "samples" / r.sample_id
        d.mkdir(parents=True, exist_ok=True)
        (d / "trace.json").write_text(json.dumps(r.to_dict(), indent=1, ensure_ascii=False), encoding="utf-8")
    return run_dir


def load_records(run_dir: "str | Path") -> list[RunRecord]:
    traces = sorted(Path(run_dir).glob("samples/*/trace.json"))
    return [RunRecord.from_dict(json.loads(p.read_text(encoding="utf-8"))) for p in traces]
