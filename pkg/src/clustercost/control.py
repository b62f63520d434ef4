"""Control plane: pod placement with optional fixed rules, and autoscaling."""

from __future__ import annotations

from dataclasses import dataclass

from .costmodel import ServiceConfig

SCALE_UP = "up"
SCALE_DOWN = "down"
HOLD = "hold"


class Scheduler:
    """Places pods on nodes, reserving their requested CPU.

    With a rule for the service, nodes are taken from the rule list in order,
    cycling when exhausted. Without one, the node with the most unreserved CPU
    wins (ties go to the lowest node id). A pod that fits nowhere stays
    pending; the caller retries on later ticks.
    """

    def __init__(self, capacities: dict[str, float],
                 rules: dict[str, list[str]] | None = None):
        self.capacities = dict(capacities)
        self.reserved = {node_id: 0.0 for node_id in capacities}
        self.rules = {k: list(v) for k, v in (rules or {}).items()}
        for service, node_ids in self.rules.items():
            for node_id in node_ids:
                if node_id not in self.capacities:
                    raise KeyError(f"rule for {service!r} references unknown "
                                   f"node {node_id!r}")
        self._cursors = {service: 0 for service in self.rules}

    def available(self, node_id: str) -> float:
        return self.capacities[node_id] - self.reserved[node_id]

    def reserve(self, node_id: str, cpu_request: float):
        self.reserved[node_id] += cpu_request
        if self.reserved[node_id] > self.capacities[node_id]:
            raise ValueError(f"node {node_id!r} overcommitted: reserved "
                             f"{self.reserved[node_id]} of "
                             f"{self.capacities[node_id]}")

    def unreserve(self, node_id: str, cpu_request: float):
        self.reserved[node_id] -= cpu_request

    def deploy_pod(self, service: str, cpu_request: float) -> str | None:
        """Pick a node and reserve `cpu_request` on it; None means pending."""
        rule = self.rules.get(service)
        if rule:
            cursor = self._cursors[service]
            node_id = rule[cursor % len(rule)]
            if self.available(node_id) >= cpu_request:
                self.reserve(node_id, cpu_request)
                self._cursors[service] = cursor + 1
                return node_id
            return None
        best = None
        for node_id in sorted(self.capacities):
            free = self.available(node_id)
            if best is None or free > self.available(best):
                best = node_id
        if best is not None and self.available(best) >= cpu_request:
            self.reserve(best, cpu_request)
            return best
        return None


@dataclass
class ScalerState:
    """Per-service autoscaler memory across cycles."""

    below_count: int = 0
    last_decision_time: int = -1


def autoscale_cycle(config: ServiceConfig, utilization_samples: list[float],
                    state: ScalerState, now: int = 0) -> str:
    """Threshold decision over one scaler cycle's per-pod utilization ratios.

    Scale up by one when the average exceeds the upscale threshold and the pod
    count allows; scale down by one only after `downscale_period` consecutive
    below-threshold cycles. The below counter resets on any other outcome.
    """
    pods = len(utilization_samples)
    avg = sum(utilization_samples) / pods
    state.last_decision_time = now
    if avg > config.upscale_threshold:
        state.below_count = 0
        if pods < config.max_pods:
            return SCALE_UP
        return HOLD
    if avg < config.downscale_threshold:
        state.below_count += 1
        if state.below_count >= config.downscale_period and pods > config.min_pods:
            state.below_count = 0
            return SCALE_DOWN
        return HOLD
    state.below_count = 0
    return HOLD


def memory_cooldown_reschedule(cluster, pod, entry):
    """Give up on a memory-starved pod and push it back through the scheduler.

    Cancels the pending allocation, detaches the pod from its node and
    resubmits it via deploy_pod on the following ticks.
    """
    node = cluster.nodes[pod.host]
    node.pending_mem.remove(entry)
    cluster.remove_pod(pod)
    cluster.pending_pods.append(pod)
    cluster._log(f"memory-reschedule pod={pod.id} from={node.id}")
