import pytest

from clustercost import (CostTable, NodeImage, PodConfig, ServiceConfig,
                         ServiceCost, bundled_data_path, parse_cost_table)


@pytest.fixture(scope="session")
def bundled_table():
    return parse_cost_table(bundled_data_path("cost-tables.csv"))


@pytest.fixture
def pod_config():
    return PodConfig(monitor_cycle=1, memory_cooldown=10, cpu_request=100,
                     cpu_limit=1000, cost_granularity=10)


@pytest.fixture
def service_config():
    def make(name, starting=1, minimum=1, maximum=4):
        return ServiceConfig(name=name, starting_pods=starting,
                             min_pods=minimum, max_pods=maximum,
                             scaler_cycle=10, upscale_threshold=0.8,
                             downscale_threshold=0.2, downscale_period=3)
    return make


def make_table(entries):
    """entries: {(image, workflow): {rps: {service: cpu}}}"""
    table = CostTable()
    for (image, workflow), knots in entries.items():
        for rps, costs in knots.items():
            table.add_knot(image, workflow, rps,
                           {s: ServiceCost(c) for s, c in costs.items()})
    return table


@pytest.fixture
def simple_image():
    def make(image_id="A", cpu=4000, mem=16000, pods=None):
        return NodeImage(id=image_id, cpu_capacity=cpu, mem_capacity=mem,
                         pod_set=pods or {"frontend": 1},
                         cost_table_ref=image_id)
    return make
