"""Seeded fault injection: drops, duplication, delays, partitions, crash
schedules, and targeted delivery rules for scripted schedules.

Every random draw comes from one generator seeded from the plan, in a
fixed order per send, so the same (seed, plan, scenario) triple always
yields the same event trace.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace


@dataclass(frozen=True, slots=True)
class Partition:
    """Bipartition active during [start_us, end_us): messages crossing
    between `side` and its complement are dropped at send time."""

    start_us: int
    end_us: int
    side: frozenset[int]

    def cuts(self, t_us: int, src: int, dst: int) -> bool:
        if not self.start_us <= t_us < self.end_us:
            return False
        return (src in self.side) != (dst in self.side)


@dataclass(frozen=True, slots=True)
class CrashEvent:
    at_us: int
    node: int
    downtime_us: int


@dataclass(frozen=True, slots=True)
class DeliveryRule:
    """Targeted override for scripted schedules; first matching rule wins.

    A None field matches anything.  `kind` is the wire type tag (PRQ, PRS,
    POQ, POS, REL, or NRQ/NRS for the naive baseline).  `count` limits how
    many sends the rule captures; the engine tracks consumption.
    """

    src: int | None = None
    dst: int | None = None
    kind: str | None = None
    count: int | None = None
    drop: bool = False
    delay_us: int | None = None
    deliver_at_us: int | None = None  # absolute delivery time

    def matches(self, src: int, dst: int, kind: str) -> bool:
        return (
            (self.src is None or self.src == src)
            and (self.dst is None or self.dst == dst)
            and (self.kind is None or self.kind == kind)
        )


@dataclass
class FaultPlan:
    seed: int = 0
    drop_probability: float = 0.0
    duplicate_probability: float = 0.0
    delay_min_us: int = 1000
    delay_max_us: int = 1000
    partitions: tuple[Partition, ...] = ()
    crashes: tuple[CrashEvent, ...] = ()
    clock_drift: dict[int, float] = field(default_factory=dict)

    def with_seed(self, seed: int) -> "FaultPlan":
        return replace(self, seed=seed)

    def drift(self, node: int) -> float:
        return self.clock_drift.get(node, 1.0)


class FateSampler:
    """Per-run sampler; one rng, fixed draw order per send."""

    def __init__(self, plan: FaultPlan):
        self.plan = plan
        self.rng = random.Random(plan.seed)

    def message_fates(self, t_us: int, src: int, dst: int) -> list[int]:
        """Delays for each copy to deliver (empty list = dropped)."""
        plan = self.plan
        for part in plan.partitions:
            if part.cuts(t_us, src, dst):
                return []
        rng = self.rng
        if plan.drop_probability and rng.random() < plan.drop_probability:
            return []
        copies = 1
        if plan.duplicate_probability and rng.random() < plan.duplicate_probability:
            copies = 2
        return [
            rng.randint(plan.delay_min_us, plan.delay_max_us) for _ in range(copies)
        ]
