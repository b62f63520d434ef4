"""Scenario and cost-table files, simulation runs, comparison and validation.

Cost tables are CSV (human-editable calibration artifacts); scenarios are
JSON documents validated against a strict schema. All numeric output uses
6 significant digits.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from importlib import resources

from .costmodel import (CostTable, NodeImage, PodConfig, ServiceCost,
                        ServiceConfig, WorkflowData, validate_cost_table)
from .engine import Cluster
from .errors import (CoverageError, NoOverlap, ParseError, SchemaError,
                     ValidationError)
from .metrics import (Monitor, aggregate, balance_stats, trimmed_window)
from .traffic import ClientRequest, ClientSpec

COST_TABLE_VERSION = 1
SCENARIO_VERSION = 1

_COST_HEADER = ["image", "workflow", "rps", "service", "cpu_millicores",
                "memory_mb"]
_SERIES_HEADER = ["time", "entity_kind", "entity_id", "service",
                  "cpu_millicores", "memory_mb"]


def bundled_data_path(name: str = "") -> str:
    """Path to a bundled example file (cost tables, scenarios, manifest)."""
    root = resources.files("clustercost") / "data"
    return str(root / name) if name else str(root)


def fmt6(x: float) -> str:
    """Fixed output format: 6 significant digits."""
    return format(x, ".6g")


def round6(x: float) -> float:
    return float(fmt6(x))


# -- cost tables -------------------------------------------------------------

def parse_cost_table(path) -> CostTable:
    """Read a cost-table CSV, validating well-formedness before returning."""
    with open(path, newline="") as fh:
        return _parse_cost_table_stream(fh, str(path))


def _parse_cost_table_stream(fh, origin: str) -> CostTable:
    lines = fh.read().splitlines()
    row_no = 0
    if lines and lines[0].startswith("#"):
        row_no = 1
        lines = lines[1:]
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError(f"{origin}: empty cost table") from None
    if header not in (_COST_HEADER, _COST_HEADER[:-1]):
        raise ParseError(f"{origin}: unexpected header {header!r}")
    has_mem = len(header) == 6
    table = CostTable()
    staged: dict[tuple[str, str, int], dict[str, ServiceCost]] = {}
    for i, row in enumerate(reader, start=row_no + 2):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(f"{origin}: row {i}: expected {len(header)} "
                             f"columns, got {len(row)}")
        image, workflow, rps_s, service = row[:4]
        try:
            rps = int(rps_s)
            cpu = float(row[4])
            mem = float(row[5]) if has_mem else 0.0
        except ValueError as e:
            raise ParseError(f"{origin}: row {i}: {e}") from None
        staged.setdefault((image, workflow, rps), {})[service] = \
            ServiceCost(cpu, mem)
    for (image, workflow, rps), costs in staged.items():
        table.add_knot(image, workflow, rps, costs)
    violations = validate_cost_table(table)
    if violations:
        details = "; ".join(f"{v.kind}({v.image},{v.workflow}): {v.detail}"
                            for v in violations)
        raise ValidationError(f"{origin}: {details}")
    return table


def serialize_cost_table(table: CostTable, path):
    with open(path, "w", newline="") as fh:
        fh.write(f"# format_version: {COST_TABLE_VERSION}\n")
        writer = csv.writer(fh)
        writer.writerow(_COST_HEADER)
        for image in table.images():
            for workflow in table.workflows(image):
                for rps, costs in table.entries[image][workflow]:
                    for service in sorted(costs):
                        c = costs[service]
                        writer.writerow([image, workflow, rps, service,
                                         fmt6(c.cpu), fmt6(c.mem)])


# -- scenarios ---------------------------------------------------------------

@dataclass
class ScenarioOptions:
    autoscaler: bool = False
    workflow_mix: str = "share"
    seed: int = 0


@dataclass
class Scenario:
    name: str
    images: dict[str, NodeImage]
    nodes: list[tuple[str, str]]  # (node id, image id)
    services: dict[str, tuple[ServiceConfig, PodConfig]]
    workflows: dict[str, WorkflowData]
    placement_rules: dict[str, list[str]] = field(default_factory=dict)
    clients: list[ClientSpec] = field(default_factory=list)
    duration_ticks: int = 0
    options: ScenarioOptions = field(default_factory=ScenarioOptions)


def _require(obj: dict, keys: set[str], optional: set[str], path: str):
    missing = keys - set(obj)
    if missing:
        raise SchemaError(f"{path}: missing keys {sorted(missing)}")
    unknown = set(obj) - keys - optional
    if unknown:
        raise SchemaError(f"{path}: unknown keys {sorted(unknown)}")


def parse_scenario(path) -> Scenario:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise ParseError(f"{path}: {e}") from None
    return scenario_from_dict(doc, origin=str(path))


def scenario_from_dict(doc: dict, origin: str = "<scenario>") -> Scenario:
    _require(doc, {"format_version", "name", "images", "nodes", "workflows",
                   "services", "clients", "duration_ticks"},
             {"placement_rules", "options"}, origin)
    if doc["format_version"] != SCENARIO_VERSION:
        raise SchemaError(f"{origin}/format_version: unsupported "
                          f"{doc['format_version']!r}")
    if doc["duration_ticks"] <= 0:
        raise SchemaError(f"{origin}/duration_ticks: must be positive")

    images: dict[str, NodeImage] = {}
    for i, img in enumerate(doc["images"]):
        p = f"{origin}/images[{i}]"
        _require(img, {"id", "cpu_capacity", "mem_capacity", "pods"},
                 {"cost_table"}, p)
        try:
            images[img["id"]] = NodeImage(
                id=img["id"], cpu_capacity=img["cpu_capacity"],
                mem_capacity=img["mem_capacity"], pod_set=dict(img["pods"]),
                cost_table_ref=img.get("cost_table", img["id"]))
        except ValueError as e:
            raise SchemaError(f"{p}: {e}") from None

    nodes = []
    for i, node in enumerate(doc["nodes"]):
        p = f"{origin}/nodes[{i}]"
        _require(node, {"id", "image"}, set(), p)
        if node["image"] not in images:
            raise SchemaError(f"{p}/image: unknown image {node['image']!r}")
        nodes.append((node["id"], node["image"]))
    if len({n for n, _ in nodes}) != len(nodes):
        raise SchemaError(f"{origin}/nodes: duplicate node ids")

    workflows: dict[str, WorkflowData] = {}
    for i, wf in enumerate(doc["workflows"]):
        p = f"{origin}/workflows[{i}]"
        _require(wf, {"name", "services"}, set(), p)
        try:
            workflows[wf["name"]] = WorkflowData(wf["name"],
                                                tuple(wf["services"]))
        except ValueError as e:
            raise SchemaError(f"{p}: {e}") from None

    services: dict[str, tuple[ServiceConfig, PodConfig]] = {}
    for i, svc in enumerate(doc["services"]):
        p = f"{origin}/services[{i}]"
        _require(svc, {"name", "starting_pods", "min_pods", "max_pods", "pod"},
                 {"scaler_cycle", "upscale_threshold", "downscale_threshold",
                  "downscale_period"}, p)
        pod = svc["pod"]
        _require(pod, {"monitor_cycle", "memory_cooldown", "cpu_request",
                       "cpu_limit", "cost_granularity"}, set(), f"{p}/pod")
        try:
            svc_cfg = ServiceConfig(
                name=svc["name"], starting_pods=svc["starting_pods"],
                min_pods=svc["min_pods"], max_pods=svc["max_pods"],
                scaler_cycle=svc.get("scaler_cycle", 60),
                upscale_threshold=svc.get("upscale_threshold", 0.8),
                downscale_threshold=svc.get("downscale_threshold", 0.2),
                downscale_period=svc.get("downscale_period", 3))
            pod_cfg = PodConfig(
                monitor_cycle=pod["monitor_cycle"],
                memory_cooldown=pod["memory_cooldown"],
                cpu_request=pod["cpu_request"], cpu_limit=pod["cpu_limit"],
                cost_granularity=pod["cost_granularity"])
        except ValueError as e:
            raise SchemaError(f"{p}: {e}") from None
        services[svc["name"]] = (svc_cfg, pod_cfg)

    for image in images.values():
        for service in image.pod_set:
            if service not in services:
                raise SchemaError(
                    f"{origin}/images: image {image.id!r} hosts {service!r} "
                    "which has no service entry")
    for wf in workflows.values():
        for service in wf.services:
            if service not in services:
                raise SchemaError(
                    f"{origin}/workflows: workflow {wf.name!r} activates "
                    f"{service!r} which has no service entry")

    rules = {k: list(v) for k, v in doc.get("placement_rules", {}).items()}
    node_ids = {n for n, _ in nodes}
    for service, rule_nodes in rules.items():
        for node_id in rule_nodes:
            if node_id not in node_ids:
                raise SchemaError(f"{origin}/placement_rules/{service}: "
                                  f"unknown node {node_id!r}")

    clients = []
    for i, cl in enumerate(doc["clients"]):
        p = f"{origin}/clients[{i}]"
        _require(cl, {"workflow", "rps", "batches", "delay"}, {"start"}, p)
        if cl["workflow"] not in workflows:
            raise SchemaError(f"{p}/workflow: unknown workflow "
                              f"{cl['workflow']!r}")
        try:
            clients.append(ClientSpec(
                request=ClientRequest(workflows[cl["workflow"]], cl["rps"]),
                num_batches=cl["batches"], delay=cl["delay"],
                start_time=cl.get("start", 0.0)))
        except ValueError as e:
            raise SchemaError(f"{p}: {e}") from None

    opts_doc = doc.get("options", {})
    _require(opts_doc, set(), {"autoscaler", "workflow_mix", "seed"},
             f"{origin}/options")
    options = ScenarioOptions(
        autoscaler=opts_doc.get("autoscaler", False),
        workflow_mix=opts_doc.get("workflow_mix", "share"),
        seed=opts_doc.get("seed", 0))
    if options.workflow_mix not in ("share", "additive"):
        raise SchemaError(f"{origin}/options/workflow_mix: unknown mode "
                          f"{options.workflow_mix!r}")

    return Scenario(name=doc["name"], images=images, nodes=nodes,
                    services=services, workflows=workflows,
                    placement_rules=rules, clients=clients,
                    duration_ticks=doc["duration_ticks"], options=options)


# -- running -----------------------------------------------------------------

@dataclass
class RunResult:
    name: str
    monitor: Monitor
    events: list[str]
    duration: int
    unfinished_millicores: float = 0.0


def run_scenario(scenario: Scenario, table: CostTable,
                 duration: int | None = None,
                 autoscaler: bool | None = None,
                 wf_mix: str | None = None) -> RunResult:
    """Execute the scenario against the cost table; deterministic."""
    used_workflows = sorted({c.request.workflow.name for c in scenario.clients})
    used_images = sorted({img_id for _, img_id in scenario.nodes})
    for img_id in used_images:
        ref = scenario.images[img_id].cost_table_ref
        for wf in used_workflows:
            if not table.has_pair(ref, wf):
                raise CoverageError(
                    f"cost table has no entries for image {ref!r} "
                    f"workflow {wf!r}, needed by scenario {scenario.name!r}")

    cluster = Cluster(
        images=scenario.images, node_images=scenario.nodes,
        services=scenario.services, table=table,
        placement_rules=scenario.placement_rules or None,
        autoscaler=(scenario.options.autoscaler if autoscaler is None
                    else autoscaler),
        wf_mix=scenario.options.workflow_mix if wf_mix is None else wf_mix)
    ticks = scenario.duration_ticks if duration is None else duration
    cluster.run(scenario.clients, ticks)
    return RunResult(name=scenario.name, monitor=cluster.monitor,
                     events=list(cluster.events), duration=ticks,
                     unfinished_millicores=cluster.unfinished_work())


# -- comparison --------------------------------------------------------------

@dataclass
class ComparisonEntry:
    name: str
    per_node: dict[str, float]
    per_service: dict[str, float]
    stats: object
    total: float


@dataclass
class ComparisonReport:
    entries: list[ComparisonEntry]  # input order
    ranking: list[str]  # best balanced first


def compare_scenarios(results: list[RunResult]) -> ComparisonReport:
    """Side-by-side per-node/per-service averages, ranked by balance."""
    if len(results) < 2:
        raise ValueError("need at least two results to compare")
    entries = []
    for res in results:
        window = trimmed_window(res.monitor.ticks)
        per_node = {k: v[0] for k, v in
                    aggregate(res.monitor, "node", window).items()}
        per_service = {k: v[0] for k, v in
                       aggregate(res.monitor, "service", window).items()}
        entries.append(ComparisonEntry(
            name=res.name, per_node=per_node, per_service=per_service,
            stats=balance_stats(per_node), total=sum(per_node.values())))
    ranking = [e.name for e in sorted(
        entries, key=lambda e: (e.stats.ratio, e.total, e.name))]
    return ComparisonReport(entries=entries, ranking=ranking)


# -- validation against measurements ----------------------------------------

@dataclass
class MeasuredRecord:
    entity_kind: str  # "service" | "node"
    entity_id: str
    millicores: float
    repetitions: int = 1


@dataclass
class MeasuredDataset:
    records: list[MeasuredRecord]


@dataclass
class ValidationRow:
    entity_kind: str
    entity_id: str
    predicted: float
    measured: float
    relative_error: float


@dataclass
class ValidationReport:
    rows: list[ValidationRow]
    uncovered: list[str]
    mape: float


def parse_measured(path) -> MeasuredDataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["entity_kind", "entity_id", "measured_millicores",
                    "repetitions"]
        if header != expected:
            raise ParseError(f"{path}: expected header {expected}, "
                             f"got {header}")
        records = []
        for i, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                records.append(MeasuredRecord(row[0], row[1], float(row[2]),
                                              int(row[3])))
            except (IndexError, ValueError) as e:
                raise ParseError(f"{path}: row {i}: {e}") from None
    return MeasuredDataset(records)


def validate_against_measurements(result: RunResult,
                                  measured: MeasuredDataset) -> ValidationReport:
    """Relative errors and MAPE of predicted vs measured averages."""
    window = trimmed_window(result.monitor.ticks)
    predicted = {
        ("service", k): v[0]
        for k, v in aggregate(result.monitor, "service", window).items()}
    predicted.update({
        ("node", k): v[0]
        for k, v in aggregate(result.monitor, "node", window).items()})
    rows, uncovered = [], []
    for rec in measured.records:
        key = (rec.entity_kind, rec.entity_id)
        if key not in predicted:
            uncovered.append(f"{rec.entity_kind}:{rec.entity_id}")
            continue
        if rec.millicores <= 0:
            uncovered.append(f"{rec.entity_kind}:{rec.entity_id}")
            continue
        pred = predicted[key]
        rows.append(ValidationRow(
            rec.entity_kind, rec.entity_id, pred, rec.millicores,
            abs(pred - rec.millicores) / rec.millicores))
    if not rows:
        raise NoOverlap("no measured entity overlaps the prediction")
    mape = sum(r.relative_error for r in rows) / len(rows)
    return ValidationReport(rows=rows, uncovered=uncovered, mape=mape)


def relative_error(predicted: float, measured: float) -> float:
    if measured <= 0:
        raise ValueError("measured value must be positive")
    return abs(predicted - measured) / measured


# -- export ------------------------------------------------------------------

def export_csv(result: RunResult, out_dir):
    """Write series.csv, summary.csv and events.log under `out_dir`.

    Series values are rounded to the output format and summaries are computed
    from the rounded values, so re-ingesting the CSV reproduces the summaries
    exactly.
    """
    os.makedirs(out_dir, exist_ok=True)
    mon = result.monitor
    with open(os.path.join(out_dir, "series.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_SERIES_HEADER)
        for t in range(mon.ticks):
            for entity_id in sorted(mon.series):
                es = mon.series[entity_id]
                writer.writerow([t, es.kind, entity_id, es.service,
                                 fmt6(es.cpu[t]), fmt6(es.mem[t])])
    rounded = _rounded_monitor(mon)
    window = trimmed_window(rounded.ticks)
    with open(os.path.join(out_dir, "summary.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["group_kind", "group_id", "avg_cpu_millicores",
                         "avg_memory_mb"])
        for kind in ("service", "node"):
            for group, (cpu, mem) in aggregate(rounded, kind, window).items():
                writer.writerow([kind, group, fmt6(cpu), fmt6(mem)])
    with open(os.path.join(out_dir, "events.log"), "w") as fh:
        for line in result.events:
            fh.write(line + "\n")


def _rounded_monitor(mon: Monitor) -> Monitor:
    out = Monitor()
    out.ticks = mon.ticks
    for entity_id, es in mon.series.items():
        out.series[entity_id] = type(es)(
            es.kind, es.service,
            [round6(v) for v in es.cpu], [round6(v) for v in es.mem])
    return out


def load_result(run_dir) -> RunResult:
    """Re-ingest a run exported by `export_csv`."""
    mon = Monitor()
    path = os.path.join(run_dir, "series.csv")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != _SERIES_HEADER:
            raise ParseError(f"{path}: unexpected header {header!r}")
        by_tick: dict[int, list] = {}
        for row in reader:
            t = int(row[0])
            by_tick.setdefault(t, []).append(
                (row[1], row[2], row[3], float(row[4]), float(row[5])))
    for t in sorted(by_tick):
        mon.record_tick(t, by_tick[t])
    events_path = os.path.join(run_dir, "events.log")
    events = []
    if os.path.exists(events_path):
        with open(events_path) as fh:
            events = fh.read().splitlines()
    return RunResult(name=os.path.basename(os.path.normpath(run_dir)),
                     monitor=mon, events=events, duration=mon.ticks)


def emit_plots(result: RunResult, out_dir):
    """Standalone SVG bar charts of trimmed-window averages per grouping."""
    os.makedirs(out_dir, exist_ok=True)
    window = trimmed_window(result.monitor.ticks)
    for kind in ("service", "node"):
        averages = {k: v[0] for k, v in
                    aggregate(result.monitor, kind, window).items()}
        svg = _bar_chart_svg(f"{result.name}: average load by {kind} "
                             "(millicores)", averages)
        with open(os.path.join(out_dir, f"by_{kind}.svg"), "w") as fh:
            fh.write(svg)


def _bar_chart_svg(title: str, values: dict[str, float]) -> str:
    width, height, margin = 640, 360, 60
    n = max(len(values), 1)
    vmax = max(values.values(), default=0.0) or 1.0
    bar_w = (width - 2 * margin) / n
    buf = io.StringIO()
    buf.write(f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
              f'height="{height}">\n')
    buf.write(f'<text x="{width / 2}" y="20" text-anchor="middle" '
              f'font-size="14">{title}</text>\n')
    plot_h = height - 2 * margin
    for i, (label, value) in enumerate(sorted(values.items())):
        h = plot_h * value / vmax
        x = margin + i * bar_w
        y = height - margin - h
        buf.write(f'<rect x="{x + 2:.1f}" y="{y:.1f}" '
                  f'width="{bar_w - 4:.1f}" height="{h:.1f}" '
                  'fill="#4878a8"/>\n')
        buf.write(f'<text x="{x + bar_w / 2:.1f}" y="{y - 4:.1f}" '
                  f'text-anchor="middle" font-size="10">{fmt6(value)}</text>\n')
        buf.write(f'<text x="{x + bar_w / 2:.1f}" y="{height - margin + 14}" '
                  f'text-anchor="middle" font-size="10">{label}</text>\n')
    buf.write(f'<line x1="{margin}" y1="{height - margin}" '
              f'x2="{width - margin}" y2="{height - margin}" '
              'stroke="black"/>\n')
    buf.write("</svg>\n")
    return buf.getvalue()


def export_comparison(report: ComparisonReport, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "comparison.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name", "rank", "max_min_ratio", "stddev", "spread",
                         "total_millicores"])
        for e in report.entries:
            ratio = e.stats.ratio
            writer.writerow([e.name, report.ranking.index(e.name) + 1,
                             "inf" if math.isinf(ratio) else fmt6(ratio),
                             fmt6(e.stats.stddev), fmt6(e.stats.spread),
                             fmt6(e.total)])
    with open(os.path.join(out_dir, "ranking.txt"), "w") as fh:
        for i, name in enumerate(report.ranking, start=1):
            fh.write(f"{i}. {name}\n")
