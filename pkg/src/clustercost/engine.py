"""Logical-time cluster simulation: nodes, pods, CPU/memory accounting.

One time unit is one second of modeled wall time, so RPS values and
millicores-per-unit share the same timescale. A tick runs a fixed phase
order: replenish budgets, retry deferred memory, inject client traffic,
place pending pods, convert queued RPS into pod work, advance consumption
loops, autoscale, sample metrics, advance the clock. The whole run is
deterministic: identical inputs give identical event logs and series.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from . import control
from .costmodel import (CostTable, NodeImage, PodConfig, ServiceConfig,
                        build_service_consumption)
from .errors import OrphanService, ReleaseOverflow
from .metrics import Monitor
from .traffic import (ClientSpec, NodeRequest, balance_client_request,
                      client_emit_schedule, split_round_robin)


@dataclass(frozen=True)
class PodRequest:
    """One pod's share of a converted node batch."""

    service: str
    cost: float  # millicores
    memory: float  # MB
    rps_quota: int


@dataclass
class ActiveRequest:
    """In-flight progress record for a PodRequest being consumed."""

    service: str
    step_size: float
    remaining: float
    memory: float
    rps_quota: int
    submitted_tick: int
    mem_allocated: bool = False


@dataclass
class PodState:
    id: str
    service: str
    config: PodConfig
    host: str | None
    available_cpu: float
    active: list[ActiveRequest] = field(default_factory=list)
    consumed_tick: float = 0.0
    consumed_cycle: float = 0.0
    ordinal: int = 0  # creation sequence number, for deterministic tie-breaks

    def held_memory(self) -> float:
        return sum(r.memory for r in self.active if r.mem_allocated)


@dataclass
class _PendingAlloc:
    pod: PodState
    request: ActiveRequest
    enqueued_tick: int


class NodeState:
    def __init__(self, node_id: str, image: NodeImage):
        self.id = node_id
        self.image = image
        self.cpu_budget = image.cpu_capacity
        self.free_mem = image.mem_capacity
        self.pods: list[PodState] = []
        self.inbound: list[NodeRequest] = []
        self.pending_mem: deque[_PendingAlloc] = deque()
        self.granted_this_tick = 0.0

    def consume_cpu(self, amount: float) -> bool:
        """All-or-nothing grant from this interval's budget."""
        if amount < 0:
            raise ValueError("cannot consume a negative amount")
        if amount == 0:
            return True
        if self.cpu_budget >= amount:
            self.cpu_budget -= amount
            self.granted_this_tick += amount
            return True
        return False

    def allocate_memory(self, amount: float) -> bool:
        if amount < 0:
            raise ValueError("cannot allocate a negative amount")
        if self.free_mem >= amount:
            self.free_mem -= amount
            return True
        return False

    def release_memory(self, amount: float):
        if self.free_mem + amount > self.image.mem_capacity + 1e-9:
            raise ReleaseOverflow(
                f"node {self.id}: releasing {amount} MB would exceed capacity "
                f"({self.free_mem} free of {self.image.mem_capacity})")
        self.free_mem += amount

    def pods_of(self, service: str) -> list[PodState]:
        return [p for p in self.pods if p.service == service]


class Cluster:
    """A simulated cluster plus its control plane and metrics monitor."""

    def __init__(self, images: dict[str, NodeImage],
                 node_images: list[tuple[str, str]],
                 services: dict[str, tuple[ServiceConfig, PodConfig]],
                 table: CostTable,
                 placement_rules: dict[str, list[str]] | None = None,
                 autoscaler: bool = False,
                 wf_mix: str = "share"):
        self.table = table
        self.services = services
        self.wf_mix = wf_mix
        self.autoscaler_enabled = autoscaler
        self.clock = 0
        self.events: list[str] = []
        self.monitor = Monitor()
        self.nodes: dict[str, NodeState] = {}
        self._pod_seq: dict[str, int] = {}
        self._ordinal = 0
        self.scaler_states = {name: control.ScalerState() for name in services}
        self.pending_pods: list[PodState] = []
        self.completed: list[tuple[int, str, PodRequest]] = []
        self.total_granted = 0.0

        for node_id, image_id in node_images:
            if image_id not in images:
                raise KeyError(f"node {node_id!r} references unknown image "
                               f"{image_id!r}")
            self.nodes[node_id] = NodeState(node_id, images[image_id])
        self._node_order = [self.nodes[n] for n in sorted(self.nodes)]

        capacities = {n.id: n.image.cpu_capacity for n in self._node_order}
        self.scheduler = control.Scheduler(capacities, placement_rules)

        # Pods prescribed by the node images are pinned to their node.
        for node in self._node_order:
            for service in sorted(node.image.pod_set):
                if service not in services:
                    raise KeyError(f"image {node.image.id!r} hosts "
                                   f"{service!r} without a service config")
                for _ in range(node.image.pod_set[service]):
                    pod = self._new_pod(service)
                    self.scheduler.reserve(node.id, pod.config.cpu_request)
                    self._attach(pod, node)

    # -- construction helpers ------------------------------------------------

    def _new_pod(self, service: str) -> PodState:
        cfg = self.services[service][1]
        seq = self._pod_seq.get(service, 0)
        self._pod_seq[service] = seq + 1
        pod = PodState(id=f"{service}-{seq}", service=service, config=cfg,
                       host=None, available_cpu=cfg.cpu_limit,
                       ordinal=self._ordinal)
        self._ordinal += 1
        return pod

    def _attach(self, pod: PodState, node: NodeState):
        pod.host = node.id
        node.pods.append(pod)

    def _log(self, msg: str):
        self.events.append(f"t={self.clock} {msg}")

    # -- traffic -------------------------------------------------------------

    def pod_placement(self) -> dict[str, dict[str, int]]:
        """service -> {node id: pod count}, as the load balancer sees it."""
        placement: dict[str, dict[str, int]] = {}
        for node in self._node_order:
            for pod in node.pods:
                per_node = placement.setdefault(pod.service, {})
                per_node[node.id] = per_node.get(node.id, 0) + 1
        return placement

    def inject(self, client_request):
        """Balance one client batch onto the node inbound queues."""
        for node_id, node_req in balance_client_request(
                client_request, self.pod_placement()):
            self.nodes[node_id].inbound.append(node_req)

    # -- RPS conversion ------------------------------------------------------

    def node_convert_rps(self, node: NodeState,
                         queued: list[NodeRequest]) -> list[tuple[PodState, PodRequest]]:
        """Turn a node's queued service RPS into per-pod cost batches."""
        if not queued:
            return []
        wf_rps: dict[str, dict[str, int]] = {}
        for req in queued:
            per_wf = wf_rps.setdefault(req.service, {})
            per_wf[req.workflow_name] = per_wf.get(req.workflow_name, 0) + req.rps
        for service in wf_rps:
            if not node.pods_of(service):
                raise OrphanService(
                    f"node {node.id} received {service!r} requests but hosts "
                    "no pod for it")
        ref = node.image.cost_table_ref
        cpu_costs = build_service_consumption(self.table, ref, wf_rps,
                                              mode=self.wf_mix)
        mem_costs = build_service_consumption(self.table, ref, wf_rps,
                                              mode=self.wf_mix, resource="mem")
        out = []
        for service in sorted(cpu_costs):
            total = sum(wf_rps[service].values())
            pods = node.pods_of(service)
            quotas = split_round_robin(total, len(pods))
            cpu_per_rps = cpu_costs[service] / total
            mem_per_rps = mem_costs.get(service, 0.0) / total
            for pod, quota in zip(pods, quotas):
                out.append((pod, PodRequest(service, cpu_per_rps * quota,
                                            mem_per_rps * quota, quota)))
        return out

    def submit(self, pod: PodState, req: PodRequest):
        """Start processing a pod batch: allocate memory, then consume in steps."""
        cfg = pod.config
        step = req.cost / cfg.cost_granularity if req.cost > 0 else 0.0
        active = ActiveRequest(req.service, step, req.cost, req.memory,
                               req.rps_quota, self.clock)
        node = self.nodes[pod.host]
        if node.allocate_memory(req.memory):
            active.mem_allocated = True
            pod.active.append(active)
            self._maybe_complete(pod, active)
        else:
            node.pending_mem.append(_PendingAlloc(pod, active, self.clock))
            self._log(f"memory-pending pod={pod.id} amount={req.memory:g}")

    def _maybe_complete(self, pod: PodState, req: ActiveRequest):
        if req.remaining <= 0:
            node = self.nodes[pod.host]
            node.release_memory(req.memory)
            req.mem_allocated = False
            pod.active.remove(req)
            self.completed.append(
                (self.clock, pod.id,
                 PodRequest(req.service, 0.0, req.memory, req.rps_quota)))
            self._drain_pending(node)

    def _drain_pending(self, node: NodeState):
        while node.pending_mem:
            entry = node.pending_mem[0]
            if not node.allocate_memory(entry.request.memory):
                break
            node.pending_mem.popleft()
            entry.request.mem_allocated = True
            entry.pod.active.append(entry.request)
            self._maybe_complete(entry.pod, entry.request)

    # -- tick lifecycle ------------------------------------------------------

    def tick(self, emissions=()):
        """Advance logical time by one unit.

        `emissions` are the client batches due this tick, in client order.
        """
        # (1) replenish budgets and per-cycle pod allowances
        for node in self._node_order:
            node.cpu_budget = node.image.cpu_capacity
            node.granted_this_tick = 0.0
            for pod in node.pods:
                pod.consumed_tick = 0.0
                if self.clock % pod.config.monitor_cycle == 0:
                    pod.available_cpu = pod.config.cpu_limit

        # (2) memory: cool-down reschedules, then FIFO retries
        for node in self._node_order:
            for entry in list(node.pending_mem):
                waited = self.clock - entry.enqueued_tick
                if waited >= entry.pod.config.memory_cooldown and waited > 0:
                    control.memory_cooldown_reschedule(self, entry.pod, entry)
            self._drain_pending(node)

        # (3) pending pod placements, then client traffic
        self._retry_pending_pods()
        for cr in emissions:
            self._log(f"client-batch wf={cr.workflow.name} rps={cr.rps}")
            self.inject(cr)

        # (4) convert queued RPS into pod work
        for node in self._node_order:
            queued, node.inbound = node.inbound, []
            for pod, req in self.node_convert_rps(node, queued):
                self.submit(pod, req)

        # (5) advance consumption loops while budgets allow
        self._consume()

        # (6) autoscaler
        if self.autoscaler_enabled:
            self._autoscale()

        # (7) sample metrics
        samples = []
        for node in self._node_order:
            for pod in node.pods:
                samples.append(("pod", pod.id, pod.service, pod.consumed_tick,
                                pod.held_memory()))
            samples.append(("node", node.id, "", node.granted_this_tick,
                            node.image.mem_capacity - node.free_mem))
        self.monitor.record_tick(self.clock, samples)

        self.clock += 1

    def _consume(self):
        """Round-robin one consumption step per in-flight request until stuck."""
        progress = True
        while progress:
            progress = False
            for node in self._node_order:
                finished = []
                for pod in node.pods:
                    if pod.available_cpu <= 0:
                        continue
                    for req in pod.active:
                        if req.remaining <= 0:
                            continue
                        step = min(req.step_size, req.remaining,
                                   pod.available_cpu)
                        if not node.consume_cpu(step):
                            continue  # whole step deferred to the next interval
                        pod.available_cpu -= step
                        pod.consumed_tick += step
                        pod.consumed_cycle += step
                        self.total_granted += step
                        req.remaining -= step
                        progress = True
                        if req.remaining <= 0:
                            finished.append((pod, req))
                        if pod.available_cpu <= 0:
                            break
                for pod, req in finished:
                    self._maybe_complete(pod, req)

    def _retry_pending_pods(self):
        still = []
        for pod in self.pending_pods:
            node_id = self.scheduler.deploy_pod(pod.service,
                                               pod.config.cpu_request)
            if node_id is None:
                still.append(pod)
            else:
                self._attach(pod, self.nodes[node_id])
                self._log(f"pod-placed pod={pod.id} node={node_id}")
        self.pending_pods = still

    def _autoscale(self):
        for name in sorted(self.services):
            svc_cfg = self.services[name][0]
            if (self.clock + 1) % svc_cfg.scaler_cycle != 0:
                continue
            pods = [p for n in self._node_order for p in n.pods
                    if p.service == name]
            pods += [p for p in self.pending_pods if p.service == name]
            if not pods:
                continue
            samples = [p.consumed_cycle / (p.config.cpu_request *
                                           svc_cfg.scaler_cycle)
                       for p in pods]
            decision = control.autoscale_cycle(svc_cfg, samples,
                                               self.scaler_states[name])
            for p in pods:
                p.consumed_cycle = 0.0
            if decision == control.SCALE_UP:
                pod = self._new_pod(name)
                self.pending_pods.append(pod)
                self._log(f"scale-up service={name} pod={pod.id}")
                self._retry_pending_pods()
            elif decision == control.SCALE_DOWN:
                victim = min((p for p in pods if p.host is not None),
                             key=lambda p: (len(p.active), -p.ordinal),
                             default=None)
                if victim is not None:
                    self.remove_pod(victim)
                    self._log(f"scale-down service={name} pod={victim.id}")

    def remove_pod(self, pod: PodState):
        node = self.nodes[pod.host]
        for req in list(pod.active):
            if req.mem_allocated:
                node.release_memory(req.memory)
        pod.active.clear()
        node.pods.remove(pod)
        self.scheduler.unreserve(node.id, pod.config.cpu_request)
        pod.host = None

    # -- run loop ------------------------------------------------------------

    def run(self, clients: list[ClientSpec], duration: int):
        """Drive the cluster for `duration` ticks with the given clients."""
        schedule = []
        for idx, spec in enumerate(clients):
            for when, cr in client_emit_schedule(spec):
                schedule.append((when, idx, cr))
        schedule.sort(key=lambda e: (e[0], e[1]))
        cursor = 0
        for t in range(duration):
            due = []
            while cursor < len(schedule) and schedule[cursor][0] < t + 1:
                due.append(schedule[cursor][2])
                cursor += 1
            self.tick(due)
        leftover = sum(len(p.active) for n in self._node_order for p in n.pods)
        pending = sum(len(n.pending_mem) for n in self._node_order)
        if leftover or pending:
            self._log(f"run-end unfinished_requests={leftover} "
                      f"memory_pending={pending}")

    def unfinished_work(self) -> float:
        """Millicores still owed by in-flight requests (saturation signal)."""
        return sum(r.remaining for n in self._node_order
                   for p in n.pods for r in p.active)
