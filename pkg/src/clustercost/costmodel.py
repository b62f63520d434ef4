"""Calibrated cost model: cost tables, interpolation and mixed-workflow consumption.

A cost table maps (node image, workflow, RPS knot) to per-service CPU costs in
millicores (plus an optional memory column in MB). Knots are the discrete RPS
levels at which the node image was profiled; queries between knots are answered
by linear interpolation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .errors import UnknownImage, UnknownService, UnknownWorkflow

log = logging.getLogger(__name__)

# Comparison tolerance for cost arithmetic done in 64-bit floats.
COST_RTOL = 1e-9


@dataclass(frozen=True)
class WorkflowData:
    """A named user-facing action and the services it activates (in parallel)."""

    name: str
    services: tuple[str, ...]

    def __post_init__(self):
        if not self.services:
            raise ValueError(f"workflow {self.name!r} activates no services")
        if len(set(self.services)) != len(self.services):
            raise ValueError(f"workflow {self.name!r} lists a service twice")


@dataclass(frozen=True)
class ServiceCost:
    """Resource cost of one service at one knot: CPU millicores, memory MB."""

    cpu: float
    mem: float = 0.0


@dataclass
class CostTable:
    """Calibrated map (image, workflow, RPS knot) -> {service: ServiceCost}.

    ``entries[image][workflow]`` is a list of ``(rps_knot, costs)`` pairs kept
    sorted by knot. Use :func:`validate_cost_table` to check well-formedness of
    externally built tables.
    """

    entries: dict[str, dict[str, list[tuple[int, dict[str, ServiceCost]]]]] = field(
        default_factory=dict
    )

    def add_knot(self, image, workflow, rps, costs: dict[str, ServiceCost]):
        knots = self.entries.setdefault(image, {}).setdefault(workflow, [])
        knots.append((rps, dict(costs)))
        knots.sort(key=lambda kv: kv[0])

    def knots(self, image, workflow) -> list[tuple[int, dict[str, ServiceCost]]]:
        try:
            by_wf = self.entries[image]
        except KeyError:
            raise UnknownImage(f"no cost data for image {image!r}") from None
        try:
            return by_wf[workflow]
        except KeyError:
            raise UnknownWorkflow(
                f"no cost data for workflow {workflow!r} on image {image!r}"
            ) from None

    def has_pair(self, image, workflow) -> bool:
        return workflow in self.entries.get(image, {})

    def images(self):
        return sorted(self.entries)

    def workflows(self, image):
        return sorted(self.entries.get(image, {}))


def _service_cost(costs: dict[str, ServiceCost], service, image, workflow, rps):
    try:
        return costs[service]
    except KeyError:
        raise UnknownService(
            f"service {service!r} absent from cost table for "
            f"({image!r}, {workflow!r}) around {rps} RPS"
        ) from None


def interpolate_cost(table: CostTable, image, workflow, service, rps,
                     resource: str = "cpu") -> float:
    """Per-service cost at an arbitrary RPS level, in millicores (or MB).

    Exact at knots. Linear between the two bracketing knots. Below the first
    knot the line passes through the origin (zero load costs zero); above the
    last knot the last segment is extended, which is flagged with a warning
    because the calibration stops at the saturation RPS.
    """
    if rps < 0:
        raise ValueError(f"rps must be non-negative, got {rps}")
    knots = table.knots(image, workflow)

    def val(costs):
        c = _service_cost(costs, service, image, workflow, rps)
        return c.cpu if resource == "cpu" else c.mem

    lo_rps, lo_costs = knots[0]
    if rps == lo_rps:
        return val(lo_costs)
    if rps < lo_rps:
        return val(lo_costs) * rps / lo_rps

    hi_rps, hi_costs = knots[-1]
    if rps == hi_rps:
        return val(hi_costs)
    if rps > hi_rps:
        log.warning(
            "extrapolating above last calibrated knot: (%s, %s, %s) at %s RPS > %s",
            image, workflow, service, rps, hi_rps,
        )
        if len(knots) == 1:
            return val(hi_costs) * rps / hi_rps
        (r1, c1), (r2, c2) = knots[-2], knots[-1]
        v1, v2 = val(c1), val(c2)
        return v2 + (v2 - v1) * (rps - r2) / (r2 - r1)

    for (r1, c1), (r2, c2) in zip(knots, knots[1:]):
        if r1 <= rps <= r2:
            if rps == r1:
                return val(c1)
            if rps == r2:
                return val(c2)
            v1, v2 = val(c1), val(c2)
            return v1 + (v2 - v1) * (rps - r1) / (r2 - r1)
    raise AssertionError("unreachable: bracketing knot not found")


def build_service_consumption(table: CostTable, image,
                              wf_rps_map: dict[str, dict[str, int]],
                              mode: str = "share",
                              resource: str = "cpu") -> dict[str, float]:
    """Combine per-workflow RPS into a per-service cost map.

    ``wf_rps_map`` maps service -> {workflow: RPS}. In the default ``share``
    mode each workflow's cost curve is evaluated at the service's *total* RPS
    and weighted by the workflow's share of that total, so the result reflects
    the contention level the node actually sees. The ``additive`` mode instead
    sums each workflow's cost at its own RPS (sensitivity-study variant).
    Services with zero total RPS are omitted.
    """
    if mode not in ("share", "additive"):
        raise ValueError(f"unknown mixed-workflow mode {mode!r}")
    out = {}
    for service in sorted(wf_rps_map):
        per_wf = wf_rps_map[service]
        total = sum(per_wf.values())
        if total <= 0:
            continue
        cost = 0.0
        for wf in sorted(per_wf):
            r = per_wf[wf]
            if r <= 0:
                continue
            if mode == "share":
                cost += (r / total) * interpolate_cost(
                    table, image, wf, service, total, resource)
            else:
                cost += interpolate_cost(table, image, wf, service, r, resource)
        out[service] = cost
    return out


@dataclass(frozen=True)
class Violation:
    kind: str  # DuplicateKnot | UnsortedKnots | NegativeCost | ServiceSetMismatch | NoKnots
    image: str
    workflow: str
    detail: str


def validate_cost_table(table: CostTable) -> list[Violation]:
    """Well-formedness report; an empty list means the table is usable."""
    report = []
    for image in sorted(table.entries):
        for workflow in sorted(table.entries[image]):
            knots = table.entries[image][workflow]
            if not knots:
                report.append(Violation("NoKnots", image, workflow, "no knots"))
                continue
            rps_values = [r for r, _ in knots]
            for a, b in zip(rps_values, rps_values[1:]):
                if a == b:
                    report.append(Violation(
                        "DuplicateKnot", image, workflow, f"knot {a} repeated"))
                elif a > b:
                    report.append(Violation(
                        "UnsortedKnots", image, workflow, f"{a} before {b}"))
            ref_services = set(knots[0][1])
            for rps, costs in knots:
                if set(costs) != ref_services:
                    report.append(Violation(
                        "ServiceSetMismatch", image, workflow,
                        f"knot {rps} covers {sorted(costs)} "
                        f"but knot {rps_values[0]} covers {sorted(ref_services)}"))
                for service, c in costs.items():
                    if c.cpu < 0 or c.mem < 0:
                        report.append(Violation(
                            "NegativeCost", image, workflow,
                            f"{service} at knot {rps}: cpu={c.cpu} mem={c.mem}"))
    return report


@dataclass(frozen=True)
class NodeImage:
    """A fixed node configuration: capacities plus its calibrated pod set."""

    id: str
    cpu_capacity: float  # millicores per time unit
    mem_capacity: float  # MB
    pod_set: dict[str, int]  # service -> pod count
    cost_table_ref: str  # image column in the cost table

    def __post_init__(self):
        if self.cpu_capacity <= 0 or self.mem_capacity <= 0:
            raise ValueError(f"image {self.id!r}: capacities must be positive")
        if not self.pod_set:
            raise ValueError(f"image {self.id!r}: empty pod set")


@dataclass(frozen=True)
class PodConfig:
    monitor_cycle: int  # ticks between CPU allowance refreshes
    memory_cooldown: int  # ticks a pod may block on memory before rescheduling
    cpu_request: float  # millicores reserved at scheduling time
    cpu_limit: float  # millicores consumable per monitor cycle
    cost_granularity: int  # consumption steps per request

    def __post_init__(self):
        if not (0 < self.cpu_request <= self.cpu_limit):
            raise ValueError("need 0 < cpu_request <= cpu_limit")
        if self.cost_granularity < 1:
            raise ValueError("cost_granularity must be >= 1")
        if self.monitor_cycle <= 0:
            raise ValueError("monitor_cycle must be positive")
        if self.memory_cooldown < 0:
            raise ValueError("memory_cooldown must be >= 0")


@dataclass(frozen=True)
class ServiceConfig:
    name: str
    starting_pods: int
    min_pods: int
    max_pods: int
    scaler_cycle: int  # ticks between autoscaler evaluations
    upscale_threshold: float
    downscale_threshold: float
    downscale_period: int  # consecutive low cycles before scaling down

    def __post_init__(self):
        if not (self.min_pods <= self.starting_pods <= self.max_pods):
            raise ValueError(
                f"service {self.name!r}: need min <= starting <= max pods")
        if not (0 <= self.downscale_threshold < self.upscale_threshold <= 1):
            raise ValueError(
                f"service {self.name!r}: thresholds must satisfy "
                "0 <= down < up <= 1")
