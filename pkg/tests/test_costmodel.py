import pytest
from hypothesis import given
from hypothesis import strategies as st

from clustercost import (ServiceCost, WorkflowData,
                         build_service_consumption, interpolate_cost,
                         validate_cost_table)
from clustercost.errors import UnknownImage, UnknownService, UnknownWorkflow

from conftest import make_table


def brute_force_linear(knots, rps):
    """Independent piecewise-linear oracle over (rps, value) pairs."""
    knots = sorted(knots)
    if rps <= knots[0][0]:
        return knots[0][1] * rps / knots[0][0]
    if rps >= knots[-1][0]:
        if len(knots) == 1:
            return knots[-1][1] * rps / knots[-1][0]
        (r1, v1), (r2, v2) = knots[-2], knots[-1]
        return v2 + (v2 - v1) * (rps - r2) / (r2 - r1)
    for (r1, v1), (r2, v2) in zip(knots, knots[1:]):
        if r1 <= rps <= r2:
            return v1 + (v2 - v1) * (rps - r1) / (r2 - r1)
    raise AssertionError


class TestInterpolateCost:
    def test_calibrated_values_exact(self, bundled_table):
        assert interpolate_cost(bundled_table, "A", "workflow1", "frontend",
                                25) == 526
        assert interpolate_cost(bundled_table, "A", "workflow3",
                                "recommendationservice", 25) == 135

    def test_linear_midpoint(self):
        table = make_table({("A", "wf"): {25: {"s": 100}, 75: {"s": 300}}})
        assert interpolate_cost(table, "A", "wf", "s", 50) == 200

    def test_below_first_knot_through_origin(self):
        table = make_table({("A", "wf"): {25: {"s": 100}}})
        assert interpolate_cost(table, "A", "wf", "s", 10) == pytest.approx(40)
        assert interpolate_cost(table, "A", "wf", "s", 0) == 0

    def test_above_last_knot_extends_last_segment(self):
        table = make_table({("A", "wf"): {25: {"s": 100}, 50: {"s": 150}}})
        assert interpolate_cost(table, "A", "wf", "s", 75) == pytest.approx(200)

    def test_single_knot_extrapolates_through_origin(self):
        table = make_table({("A", "wf"): {25: {"s": 100}}})
        assert interpolate_cost(table, "A", "wf", "s", 50) == pytest.approx(200)

    def test_unknown_image_workflow_service(self):
        table = make_table({("A", "wf"): {25: {"s": 100}}})
        with pytest.raises(UnknownImage):
            interpolate_cost(table, "B", "wf", "s", 25)
        with pytest.raises(UnknownWorkflow):
            interpolate_cost(table, "A", "other", "s", 25)
        with pytest.raises(UnknownService):
            interpolate_cost(table, "A", "wf", "nope", 25)

    def test_negative_rps_rejected(self):
        table = make_table({("A", "wf"): {25: {"s": 100}}})
        with pytest.raises(ValueError):
            interpolate_cost(table, "A", "wf", "s", -1)

    @given(st.lists(st.tuples(st.integers(1, 1000),
                              st.floats(0, 1e5, allow_nan=False)),
                    min_size=1, max_size=8,
                    unique_by=lambda kv: kv[0]),
           st.floats(0, 1200, allow_nan=False))
    def test_matches_brute_force_oracle(self, knots, rps):
        table = make_table({("A", "wf"): {r: {"s": v} for r, v in knots}})
        got = interpolate_cost(table, "A", "wf", "s", rps)
        want = brute_force_linear(knots, rps)
        assert got == pytest.approx(want, rel=1e-9, abs=1e-9)

    @given(st.integers(2, 6), st.floats(0, 1, exclude_max=True))
    def test_monotone_tables_interpolate_monotonically(self, n, lam):
        knots = [(25 * (i + 1), 100.0 * (i + 1) ** 2) for i in range(n)]
        table = make_table({("A", "wf"): {r: {"s": v} for r, v in knots}})
        r1, v1 = knots[0]
        r2, v2 = knots[1]
        mid = interpolate_cost(table, "A", "wf", "s", r1 + lam * (r2 - r1))
        assert v1 - 1e-9 <= mid <= v2 + 1e-9

    def test_exact_at_every_knot(self, bundled_table):
        for image in bundled_table.images():
            for wf in bundled_table.workflows(image):
                for rps, costs in bundled_table.entries[image][wf]:
                    for service, c in costs.items():
                        assert interpolate_cost(
                            bundled_table, image, wf, service, rps) == c.cpu


class TestBuildServiceConsumption:
    def test_single_workflow_is_plain_lookup(self, bundled_table):
        out = build_service_consumption(
            bundled_table, "A", {"frontend": {"workflow1": 25}})
        assert out["frontend"] == 526

    def test_equal_shares_average(self):
        table = make_table({
            ("A", "wf1"): {50: {"s": 200}},
            ("A", "wf2"): {50: {"s": 400}},
        })
        out = build_service_consumption(
            table, "A", {"s": {"wf1": 25, "wf2": 25}})
        assert out["s"] == pytest.approx(300)

    def test_zero_rps_service_omitted(self, bundled_table):
        out = build_service_consumption(
            bundled_table, "A",
            {"frontend": {"workflow1": 25}, "adservice": {"workflow1": 0}})
        assert "adservice" not in out

    def test_additive_mode(self):
        table = make_table({
            ("A", "wf1"): {25: {"s": 100}},
            ("A", "wf2"): {25: {"s": 200}},
        })
        out = build_service_consumption(
            table, "A", {"s": {"wf1": 25, "wf2": 25}}, mode="additive")
        assert out["s"] == pytest.approx(300)

    @given(st.permutations(["workflow1", "workflow2", "workflow3"]))
    def test_permutation_invariant(self, bundled_table, order):
        rps = {"workflow1": 30, "workflow2": 45, "workflow3": 60}
        wf_map = {"frontend": {wf: rps[wf] for wf in order}}
        out = build_service_consumption(bundled_table, "A", wf_map)
        ref = build_service_consumption(
            bundled_table, "A", {"frontend": dict(sorted(rps.items()))})
        assert out["frontend"] == ref["frontend"]

    def test_unknown_mode_rejected(self, bundled_table):
        with pytest.raises(ValueError):
            build_service_consumption(bundled_table, "A", {}, mode="bogus")


class TestValidateCostTable:
    def test_duplicate_knot(self):
        table = make_table({("A", "wf"): {25: {"s": 100}, 50: {"s": 200}}})
        table.entries["A"]["wf"].append((25, {"s": ServiceCost(110)}))
        kinds = {v.kind for v in validate_cost_table(table)}
        assert "DuplicateKnot" in kinds or "UnsortedKnots" in kinds

    def test_negative_cost(self):
        table = make_table({("A", "wf"): {25: {"s": -5}}})
        assert {v.kind for v in validate_cost_table(table)} == {"NegativeCost"}

    def test_service_set_mismatch(self):
        table = make_table({("A", "wf"): {25: {"s": 100},
                                          50: {"s": 200, "t": 10}}})
        kinds = {v.kind for v in validate_cost_table(table)}
        assert "ServiceSetMismatch" in kinds

    def test_bundled_table_is_clean(self, bundled_table):
        assert validate_cost_table(bundled_table) == []


class TestWorkflowData:
    def test_empty_services_rejected(self):
        with pytest.raises(ValueError):
            WorkflowData("wf", ())

    def test_duplicate_services_rejected(self):
        with pytest.raises(ValueError):
            WorkflowData("wf", ("a", "a"))
