import pytest
from hypothesis import given
from hypothesis import strategies as st

from clustercost import (ClientRequest, ClientSpec, WorkflowData,
                         balance_client_request, client_emit_schedule,
                         split_round_robin)
from clustercost.errors import UnroutableService
from clustercost.traffic import balanced_pod_order

WF1 = WorkflowData("workflow1", ("frontend", "currencyservice", "adservice",
                                 "cartservice", "productcatalogservice",
                                 "redis-cart"))


class TestClientEmitSchedule:
    def test_unit_delay(self):
        spec = ClientSpec(ClientRequest(WF1, 100), num_batches=80, delay=1.0)
        times = [t for t, _ in client_emit_schedule(spec)]
        assert times == [float(t) for t in range(80)]

    def test_zero_batches(self):
        spec = ClientSpec(ClientRequest(WF1, 100), num_batches=0, delay=1.0)
        assert client_emit_schedule(spec) == []

    def test_delay_and_start(self):
        spec = ClientSpec(ClientRequest(WF1, 10), num_batches=3, delay=2.0,
                          start_time=1.0)
        assert [t for t, _ in client_emit_schedule(spec)] == [1.0, 3.0, 5.0]

    def test_every_batch_carries_full_request(self):
        spec = ClientSpec(ClientRequest(WF1, 42), num_batches=5, delay=1.0)
        assert all(cr.rps == 42 for _, cr in client_emit_schedule(spec))


class TestSplitRoundRobin:
    def test_ten_over_four(self):
        assert split_round_robin(10, 4) == [3, 3, 2, 2]

    def test_eight_over_four(self):
        assert split_round_robin(8, 4) == [2, 2, 2, 2]

    def test_single_receiver(self):
        assert split_round_robin(7, 1) == [7]

    def test_more_receivers_than_requests(self):
        assert split_round_robin(3, 5) == [1, 1, 1, 0, 0]

    def test_invalid_args(self):
        with pytest.raises(ValueError):
            split_round_robin(-1, 2)
        with pytest.raises(ValueError):
            split_round_robin(5, 0)

    @given(st.integers(0, 10_000), st.integers(1, 200))
    def test_sum_exact_and_fair(self, total, n):
        quotas = split_round_robin(total, n)
        assert sum(quotas) == total
        assert max(quotas) - min(quotas) <= 1

    @given(st.integers(0, 1000), st.integers(1, 50))
    def test_stateless(self, total, n):
        assert split_round_robin(total, n) == split_round_robin(total, n)


class TestBalanceClientRequest:
    def placement(self, counts):
        return {s: dict(nodes) for s, nodes in counts.items()}

    def test_two_nodes_even_split(self):
        wf = WorkflowData("wf", ("frontend",))
        out = balance_client_request(
            ClientRequest(wf, 100),
            self.placement({"frontend": {"n1": 2, "n2": 2}}))
        assert [(n, r.rps) for n, r in out] == [("n1", 50), ("n2", 50)]

    def test_single_pod_gets_everything(self):
        wf = WorkflowData("wf", ("frontend",))
        out = balance_client_request(
            ClientRequest(wf, 77), self.placement({"frontend": {"n1": 1}}))
        assert [(n, r.rps) for n, r in out] == [("n1", 77)]

    def test_wf1_fans_out_to_six_services(self):
        placement = {s: {"n1": 1} for s in WF1.services}
        out = balance_client_request(ClientRequest(WF1, 60), placement)
        assert len(out) == 6
        assert {r.service for _, r in out} == set(WF1.services)

    def test_unroutable_service(self):
        with pytest.raises(UnroutableService):
            balance_client_request(ClientRequest(WF1, 10),
                                   {"frontend": {"n1": 1}})

    def test_remainder_lands_on_distinct_nodes_first(self):
        wf = WorkflowData("wf", ("s",))
        out = balance_client_request(
            ClientRequest(wf, 100),
            self.placement({"s": {"n1": 2, "n2": 2, "n3": 2, "n4": 2}}))
        assert [r.rps for _, r in out] == [25, 25, 25, 25]

    @given(st.integers(1, 5000), st.integers(1, 6), st.integers(1, 4))
    def test_flow_conservation_and_homogeneity(self, rps, n_nodes, per_node):
        wf = WorkflowData("wf", ("s",))
        placement = {"s": {f"n{i}": per_node for i in range(n_nodes)}}
        out = balance_client_request(ClientRequest(wf, rps), placement)
        assert sum(r.rps for _, r in out) == rps
        # identical nodes: totals differ by at most one request
        totals = {n: 0 for n in placement["s"]}
        for n, r in out:
            totals[n] += r.rps
        assert max(totals.values()) - min(totals.values()) <= 1

    def test_identical_nodes_identical_totals_when_divisible(self):
        wf = WorkflowData("wf", ("s",))
        placement = {"s": {f"n{i}": 3 for i in range(4)}}
        out = balance_client_request(ClientRequest(wf, 100), placement)
        totals = {n: r.rps for n, r in out}
        assert len(set(totals.values())) == 1


class TestBalancedPodOrder:
    def test_interleaves_replicas_across_nodes(self):
        order = balanced_pod_order({"n1": 2, "n2": 1, "n3": 2})
        assert order == ["n1", "n2", "n3", "n1", "n3"]

    def test_empty(self):
        assert balanced_pod_order({}) == []
