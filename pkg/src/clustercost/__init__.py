"""Deterministic logical-time simulator for Kubernetes-style cluster
resource consumption, driven by empirically calibrated cost tables."""

from .costmodel import (CostTable, NodeImage, PodConfig, ServiceConfig,
                        ServiceCost, WorkflowData, build_service_consumption,
                        interpolate_cost, validate_cost_table)
from .engine import Cluster, PodRequest
from .metrics import Monitor, aggregate, balance_stats, trimmed_window
from .scenario import (RunResult, Scenario, bundled_data_path,
                       compare_scenarios, export_csv,
                       emit_plots, load_result, parse_cost_table,
                       parse_measured, parse_scenario, run_scenario,
                       serialize_cost_table, validate_against_measurements)
from .traffic import (ClientRequest, ClientSpec, NodeRequest,
                      balance_client_request, client_emit_schedule,
                      split_round_robin)

__version__ = "0.1.0"
