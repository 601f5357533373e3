"""Per-task topic quotas: which topics feed each constraint and how many samples each gets."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from ..errors import IndivisibleQuota
from ..model import TOPICS, ConstraintKind

# label -> (subgroup total, topics); totals follow the per-task ratios
TABLES: dict[ConstraintKind, tuple[tuple[str, int, tuple[str, ...]], ...]] = {
    ConstraintKind.SHOT: (("All topics", 200, TOPICS),),
    ConstraintKind.TEMPORAL: (
        ("Pre-context", 75, ("Knowledge", "Fitness", "Food")),
        ("Post-context", 75, ("Sports", "Automotive", "Gaming")),
        ("Pre- and post-context", 50, ("Film", "TV Series")),
    ),
    ConstraintKind.COLOR: (
        ("Warm", 70, ("Parenting", "Fashion")),
        ("Cold", 70, ("Tech", "Visual Arts")),
        ("Neutral", 70, ("Documentary", "Tourism")),
    ),
    ConstraintKind.STYLE: (
        ("Real", 50, ("Variety Shows",)),
        ("2D Animation", 50, ("Animation",)),
        ("3D Animation", 50, ("Gaming",)),
        ("Graphic", 50, ("Music",)),
    ),
    ConstraintKind.AUDIO: (
        ("HumanVoice", 100, ("TV Series", "Documentary")),
        ("BackgroundMusic", 50, ("Dance",)),
        ("AmbientSound", 50, ("Animals",)),
    ),
    ConstraintKind.RESOLUTION: (
        ("1080P", 100, ("Fashion", "Film")),
        ("720P", 100, ("Lifestyle Vlogs", "Fitness")),
    ),
}


@dataclass(frozen=True)
class Subgroup:
    label: str
    total: int
    topics: tuple[str, ...]
    per_topic: int


@dataclass(frozen=True)
class QuotaPlan:
    task: ConstraintKind
    subgroups: tuple[Subgroup, ...]

    @property
    def total(self) -> int:
        return sum(s.total for s in self.subgroups)

    def per_topic_counts(self) -> dict[tuple[str, str], int]:
        return {(s.label, t): s.per_topic for s in self.subgroups for t in s.topics}

    def to_dict(self) -> dict:
        return {
            "task": self.task.value,
            "total": self.total,
            "subgroups": [
                {"label": s.label, "total": s.total, "topics": list(s.topics), "per_topic": s.per_topic}
                for s in self.subgroups
            ],
        }


def plan_quotas(task: "ConstraintKind | str", total: Optional[int] = None) -> QuotaPlan:
    """Split a task's samples over its topics.

    With ``total`` the subgroup ratios are kept and rescaled, e.g. 24
    Temporal samples become 9:9:6.
    """
    task = ConstraintKind.parse(task)
    table = TABLES[task]
    base = sum(t for _, t, _ in table)
    subgroups = []
    for label, sub_total, topics in table:
        if total is not None:
            scaled = Fraction(total * sub_total, base)
            if scaled.denominator != 1:
                raise IndivisibleQuota(f"{task.value}/{label}: {total} samples do not keep the ratio")
            sub_total = int(scaled)
        if sub_total % len(topics):
            raise IndivisibleQuota(f"{task.value}/{label}: {sub_total} samples over {len(topics)} topics")
        subgroups.append(Subgroup(label, sub_total, tuple(topics), sub_total // len(topics)))
    return QuotaPlan(task, tuple(subgroups))
