"""Clients emitting batched workflow requests, and the master load balancer.

The load balancer converts a client's workflow batch into per-node service
batches: for every service of the workflow the RPS is split round-robin over
that service's pods, and per-pod quotas are then grouped by hosting node.
"""

from __future__ import annotations

from dataclasses import dataclass

from .costmodel import WorkflowData
from .errors import UnroutableService


@dataclass(frozen=True)
class ClientRequest:
    workflow: WorkflowData
    rps: int

    def __post_init__(self):
        if self.rps <= 0:
            raise ValueError("client batch size must be positive")


@dataclass(frozen=True)
class ClientSpec:
    """A client firing `num_batches` copies of `request`, `delay` apart."""

    request: ClientRequest
    num_batches: int
    delay: float
    start_time: float = 0.0

    def __post_init__(self):
        if self.num_batches < 0:
            raise ValueError("num_batches must be >= 0")
        if self.delay <= 0:
            raise ValueError("delay must be positive")


@dataclass(frozen=True)
class NodeRequest:
    service: str
    workflow_name: str
    rps: int


def client_emit_schedule(spec: ClientSpec) -> list[tuple[float, ClientRequest]]:
    """Emission times for a client: start, start+delay, ..."""
    return [(spec.start_time + k * spec.delay, spec.request)
            for k in range(spec.num_batches)]


def split_round_robin(total: int, n: int) -> list[int]:
    """Split `total` requests over `n` receivers, remainder to the first ones.

    Quotas sum to `total` exactly and differ by at most 1. Stateless: the
    remainder position does not carry over between calls.
    """
    if total < 0:
        raise ValueError("total must be >= 0")
    if n < 1:
        raise ValueError("n must be >= 1")
    base, extra = divmod(total, n)
    return [base + 1 if i < extra else base for i in range(n)]


def balanced_pod_order(pods_per_node: dict[str, int]) -> list[str]:
    """Node id per pod, interleaved by replica index.

    The first replica of every node comes before any second replica, with
    nodes in sorted id order. This way the round-robin remainder lands on
    distinct nodes first, so identical nodes receive identical totals.
    """
    order = []
    node_ids = sorted(pods_per_node)
    max_replicas = max(pods_per_node.values(), default=0)
    for replica in range(max_replicas):
        for node_id in node_ids:
            if replica < pods_per_node[node_id]:
                order.append(node_id)
    return order


def balance_client_request(cr: ClientRequest,
                           pod_placement: dict[str, dict[str, int]],
                           ) -> list[tuple[str, NodeRequest]]:
    """Fan a client batch out into one NodeRequest per (service, node).

    `pod_placement` maps service -> {node id: pod count}. Per-pod quotas from
    `split_round_robin` are summed per hosting node; nodes with a zero quota
    are skipped. Returns (node id, request) pairs in deterministic order.
    """
    out = []
    for service in cr.workflow.services:
        per_node = pod_placement.get(service) or {}
        pod_order = balanced_pod_order(per_node)
        if not pod_order:
            raise UnroutableService(
                f"workflow {cr.workflow.name!r} activates {service!r} "
                "but no pod hosts it")
        quotas = split_round_robin(cr.rps, len(pod_order))
        per_node_total: dict[str, int] = {}
        for node_id, quota in zip(pod_order, quotas):
            per_node_total[node_id] = per_node_total.get(node_id, 0) + quota
        for node_id in sorted(per_node_total):
            if per_node_total[node_id] > 0:
                out.append((node_id, NodeRequest(service, cr.workflow.name,
                                                 per_node_total[node_id])))
    return out
