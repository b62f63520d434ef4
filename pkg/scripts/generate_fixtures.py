#!/usr/bin/env python3
"""Regenerate the bundled example data under src/clustercost/data/.

Image A's 25-RPS costs come from published calibration measurements; every
other knot (and the whole of images B and C) is synthetic, scaled linearly
with RPS, and flagged as such in manifest.json.
"""

import json
import os

HERE = os.path.dirname(os.path.abspath(__file__))
DATA = os.path.join(HERE, "..", "src", "clustercost", "data")

KNOTS = [25, 50, 75, 100, 125, 150]

# (image, workflow) -> {service: millicores at 25 RPS}
BASE_COSTS = {
    ("A", "workflow1"): {
        "frontend": 526, "currencyservice": 434, "adservice": 72,
        "cartservice": 72, "productcatalogservice": 57, "redis-cart": 12,
    },
    ("A", "workflow2"): {
        "frontend": 558, "currencyservice": 436, "adservice": 72,
        "cartservice": 73, "productcatalogservice": 57, "redis-cart": 12,
    },
    ("A", "workflow3"): {
        "frontend": 467, "currencyservice": 114, "adservice": 73,
        "cartservice": 73, "productcatalogservice": 276,
        "recommendationservice": 135, "redis-cart": 12,
    },
    # Image B favors workflows 1 and 2.
    ("B", "workflow1"): {
        "frontend": 480, "currencyservice": 400, "adservice": 72,
        "cartservice": 72, "productcatalogservice": 52, "redis-cart": 12,
    },
    ("B", "workflow2"): {
        "frontend": 510, "currencyservice": 402, "adservice": 72,
        "cartservice": 73, "productcatalogservice": 52, "redis-cart": 12,
    },
    ("B", "workflow3"): {
        "frontend": 500, "currencyservice": 120, "adservice": 73,
        "cartservice": 73, "productcatalogservice": 290,
        "recommendationservice": 150, "redis-cart": 12,
    },
    # Image C favors workflow 3.
    ("C", "workflow1"): {
        "frontend": 560, "currencyservice": 450, "adservice": 75,
        "cartservice": 75, "productcatalogservice": 60, "redis-cart": 13,
    },
    ("C", "workflow2"): {
        "frontend": 590, "currencyservice": 452, "adservice": 75,
        "cartservice": 76, "productcatalogservice": 60, "redis-cart": 13,
    },
    ("C", "workflow3"): {
        "frontend": 430, "currencyservice": 108, "adservice": 70,
        "cartservice": 70, "productcatalogservice": 255,
        "recommendationservice": 125, "redis-cart": 11,
    },
}

CALIBRATED = {("A", 25)}  # everything else is synthetic

WORKFLOWS = [
    {"name": "workflow1",
     "services": ["frontend", "currencyservice", "adservice", "cartservice",
                  "productcatalogservice", "redis-cart"]},
    {"name": "workflow2",
     "services": ["frontend", "currencyservice", "adservice", "cartservice",
                  "productcatalogservice", "redis-cart"]},
    {"name": "workflow3",
     "services": ["frontend", "currencyservice", "adservice", "cartservice",
                  "productcatalogservice", "redis-cart",
                  "recommendationservice"]},
]

POD_SETS = {
    "A": {"frontend": 2, "currencyservice": 2, "adservice": 1,
          "cartservice": 1, "productcatalogservice": 2, "redis-cart": 1,
          "recommendationservice": 2},
    # B and C cannot serve the workflows alone; one pod of each of the
    # missing utility services is added so every workflow stays routable.
    "B": {"frontend": 4, "currencyservice": 3, "productcatalogservice": 1,
          "recommendationservice": 1, "adservice": 1, "cartservice": 1,
          "redis-cart": 1},
    "C": {"frontend": 3, "currencyservice": 2, "productcatalogservice": 2,
          "recommendationservice": 3, "adservice": 1, "cartservice": 1,
          "redis-cart": 1},
}

POD_CONFIG = {"monitor_cycle": 1, "memory_cooldown": 10, "cpu_request": 100,
              "cpu_limit": 1000, "cost_granularity": 10}


def write_cost_table():
    lines = ["# format_version: 1",
             "image,workflow,rps,service,cpu_millicores,memory_mb"]
    for (image, workflow) in sorted(BASE_COSTS):
        base = BASE_COSTS[(image, workflow)]
        for rps in KNOTS:
            for service in sorted(base):
                cpu = base[service] * rps / 25
                lines.append(f"{image},{workflow},{rps},{service},{cpu:.6g},0")
    with open(os.path.join(DATA, "cost-tables.csv"), "w") as fh:
        fh.write("\n".join(lines) + "\n")


def service_entries(node_image_ids):
    totals = {}
    for image_id in node_image_ids:
        for service, count in POD_SETS[image_id].items():
            totals[service] = totals.get(service, 0) + count
    out = []
    for service in sorted(totals):
        out.append({
            "name": service,
            "starting_pods": totals[service],
            "min_pods": 1,
            "max_pods": max(totals[service] * 2, 4),
            "scaler_cycle": 60,
            "upscale_threshold": 0.8,
            "downscale_threshold": 0.2,
            "downscale_period": 3,
            "pod": dict(POD_CONFIG),
        })
    return out


def image_entry(image_id):
    return {"id": image_id, "cpu_capacity": 4000, "mem_capacity": 16000,
            "pods": POD_SETS[image_id], "cost_table": image_id}


def scenario(name, node_image_ids, clients, ticks=900):
    return {
        "format_version": 1,
        "name": name,
        "images": [image_entry(i) for i in sorted(set(node_image_ids))],
        "nodes": [{"id": f"node{i + 1}", "image": img}
                  for i, img in enumerate(node_image_ids)],
        "workflows": WORKFLOWS,
        "services": service_entries(node_image_ids),
        "clients": clients,
        "duration_ticks": ticks,
        "options": {"autoscaler": False, "workflow_mix": "share"},
    }


def client(workflow, rps, batches=900, delay=1.0, start=0.0):
    return {"workflow": workflow, "rps": rps, "batches": batches,
            "delay": delay, "start": start}


SCENARIOS = {
    # RQ1-style profile P1 on four homogeneous type-A nodes.
    "table3-P1.json": scenario(
        "table3-P1", ["A", "A", "A", "A"],
        [client("workflow1", 100), client("workflow3", 100)]),
    # Single type-A node under a constant 25 RPS of workflow 1.
    "single-A-wf1-25.json": scenario(
        "single-A-wf1-25", ["A"], [client("workflow1", 25)]),
    # RQ2-style heterogeneous clusters under the T2 triplet profile.
    "table5-3B1C.json": scenario(
        "table5-3B1C", ["B", "B", "B", "C"],
        [client("workflow1", 50), client("workflow2", 125),
         client("workflow3", 125)]),
    "table5-1B3C.json": scenario(
        "table5-1B3C", ["B", "C", "C", "C"],
        [client("workflow1", 50), client("workflow2", 125),
         client("workflow3", 125)]),
}


def write_manifest():
    knots = []
    for (image, workflow) in sorted(BASE_COSTS):
        for rps in KNOTS:
            knots.append({"image": image, "workflow": workflow, "rps": rps,
                          "synthetic": (image, rps) not in CALIBRATED})
    manifest = {
        "format_version": 1,
        "cost_table": "cost-tables.csv",
        "scenarios": sorted(SCENARIOS),
        "notes": [
            "Image A costs at 25 RPS are calibrated measurements; all other "
            "knots scale linearly with RPS and are synthetic.",
            "Images B and C are entirely synthetic.",
            "Images B and C carry one pod each of adservice, cartservice and "
            "redis-cart on top of their profile so every workflow is "
            "routable without a helper node.",
        ],
        "knots": knots,
    }
    with open(os.path.join(DATA, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def main():
    os.makedirs(DATA, exist_ok=True)
    write_cost_table()
    for fname, doc in SCENARIOS.items():
        with open(os.path.join(DATA, fname), "w") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    write_manifest()
    print(f"wrote fixtures to {os.path.normpath(DATA)}")


if __name__ == "__main__":
    main()
