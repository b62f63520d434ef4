"""Consumption series: per-tick sampling, grouped aggregation, balance stats."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DuplicateSample, EmptyWindow


@dataclass
class EntitySeries:
    kind: str  # "pod" | "node"
    service: str  # owning service for pods, "" for nodes
    cpu: list[float] = field(default_factory=list)
    mem: list[float] = field(default_factory=list)


class Monitor:
    """Collects one (cpu, mem) sample per entity per tick.

    Entities appearing mid-run are backfilled with zeros; entities missing
    from a tick's samples (e.g. removed pods) are padded with zeros, so every
    series has the same length.
    """

    def __init__(self):
        self.series: dict[str, EntitySeries] = {}
        self.ticks = 0

    def record_tick(self, t: int, samples):
        """Append samples for tick `t`; `samples` is an iterable of
        (kind, entity_id, service, cpu, mem) tuples."""
        if t != self.ticks:
            raise ValueError(f"expected tick {self.ticks}, got {t}")
        seen = set()
        for kind, entity_id, service, cpu, mem in samples:
            if entity_id in seen:
                raise DuplicateSample(f"entity {entity_id!r} sampled twice "
                                      f"at tick {t}")
            seen.add(entity_id)
            es = self.series.get(entity_id)
            if es is None:
                es = EntitySeries(kind, service,
                                  [0.0] * self.ticks, [0.0] * self.ticks)
                self.series[entity_id] = es
            es.cpu.append(cpu)
            es.mem.append(mem)
        for entity_id, es in self.series.items():
            if entity_id not in seen:
                es.cpu.append(0.0)
                es.mem.append(0.0)
        self.ticks += 1

    def entities(self, kind: str) -> list[str]:
        return sorted(e for e, s in self.series.items() if s.kind == kind)


def trimmed_window(length: int, frac: float = 0.05) -> tuple[int, int]:
    """Steady window: drop the first and last `frac` of ticks (warm-up/drain)."""
    cut = int(length * frac)
    return cut, length - cut


def aggregate(monitor: Monitor, group_by: str,
              window: tuple[int, int]) -> dict[str, tuple[float, float]]:
    """Average (cpu, mem) per group over a tick window.

    `group_by` is "service" (sum of the service's pods across all nodes) or
    "node" (the node's own consumption samples).
    """
    start, end = window
    if not (0 <= start < end <= monitor.ticks):
        raise EmptyWindow(f"window [{start}, {end}) not within run of "
                          f"{monitor.ticks} ticks")
    if group_by not in ("service", "node"):
        raise ValueError(f"unknown grouping {group_by!r}")
    sums: dict[str, list[float]] = {}
    for entity_id, es in monitor.series.items():
        if group_by == "node":
            if es.kind != "node":
                continue
            key = entity_id
        else:
            if es.kind != "pod":
                continue
            key = es.service
        acc = sums.setdefault(key, [0.0, 0.0])
        acc[0] += sum(es.cpu[start:end])
        acc[1] += sum(es.mem[start:end])
    n = end - start
    return {key: (acc[0] / n, acc[1] / n) for key, acc in sorted(sums.items())}


@dataclass(frozen=True)
class BalanceStats:
    ratio: float  # max/min node load; +inf when some node is idle
    stddev: float  # population standard deviation
    spread: float  # max - min


def balance_stats(per_node_averages: dict[str, float]) -> BalanceStats:
    """Load-balance quality of a set of per-node average loads."""
    if not per_node_averages:
        raise ValueError("need at least one node")
    values = list(per_node_averages.values())
    lo, hi = min(values), max(values)
    ratio = hi / lo if lo > 0 else math.inf
    mean = sum(values) / len(values)
    stddev = math.sqrt(sum((v - mean) ** 2 for v in values) / len(values))
    return BalanceStats(ratio=ratio, stddev=stddev, spread=hi - lo)
