"""Command-line interface: simulate, compare and validate deployment scenarios.

Exit codes: 0 on success, 2 on validation violations, 1 on other errors.
"""

from __future__ import annotations

import sys

import click

from . import scenario as sio
from .errors import ClusterCostError, ValidationError
from .scenario import fmt6


@click.group()
def main():
    """Predict CPU/memory consumption of containerized deployments."""


@main.command()
@click.option("--scenario", "scenario_path", required=True,
              type=click.Path(exists=True), help="Scenario JSON file.")
@click.option("--cost-table", "table_path", required=True,
              type=click.Path(exists=True), help="Calibrated cost-table CSV.")
@click.option("--out", "out_dir", required=True, type=click.Path(),
              help="Output directory for series, summaries and plots.")
@click.option("--ticks", type=int, default=None,
              help="Override the scenario duration.")
@click.option("--no-autoscaler", is_flag=True, default=False,
              help="Force the autoscaler off.")
@click.option("--wf-mix", type=click.Choice(["share", "additive"]),
              default=None, help="Mixed-workflow combination rule.")
def simulate(scenario_path, table_path, out_dir, ticks, no_autoscaler, wf_mix):
    """Run one scenario and export its consumption series."""
    scn = sio.parse_scenario(scenario_path)
    table = sio.parse_cost_table(table_path)
    result = sio.run_scenario(
        scn, table, duration=ticks,
        autoscaler=False if no_autoscaler else None, wf_mix=wf_mix)
    sio.export_csv(result, out_dir)
    sio.emit_plots(result, out_dir)
    if result.unfinished_millicores > 0:
        click.echo(f"warning: {fmt6(result.unfinished_millicores)} millicores "
                   "of work unfinished at run end (saturation)", err=True)
    click.echo(f"simulated {scn.name!r} for {result.duration} ticks "
               f"-> {out_dir}")


@main.command()
@click.option("--out", "out_dir", required=True, type=click.Path(),
              help="Output directory for the comparison report.")
@click.argument("results", nargs=-1, required=True,
                type=click.Path(exists=True, file_okay=False))
def compare(out_dir, results):
    """Compare previously exported runs, ranking by load balance."""
    loaded = [sio.load_result(d) for d in results]
    report = sio.compare_scenarios(loaded)
    sio.export_comparison(report, out_dir)
    for i, name in enumerate(report.ranking, start=1):
        click.echo(f"{i}. {name}")


@main.command()
@click.option("--result", "run_dir", required=True,
              type=click.Path(exists=True, file_okay=False),
              help="Directory of an exported run.")
@click.option("--measured", "measured_path", required=True,
              type=click.Path(exists=True), help="Measured-averages CSV.")
def validate(run_dir, measured_path):
    """Compare predictions against cluster measurements."""
    result = sio.load_result(run_dir)
    measured = sio.parse_measured(measured_path)
    report = sio.validate_against_measurements(result, measured)
    for row in report.rows:
        click.echo(f"{row.entity_kind}:{row.entity_id} "
                   f"predicted={fmt6(row.predicted)} "
                   f"measured={fmt6(row.measured)} "
                   f"rel_err={fmt6(row.relative_error)}")
    for name in report.uncovered:
        click.echo(f"{name} uncovered (excluded from MAPE)")
    click.echo(f"MAPE={fmt6(report.mape)}")


def run():
    try:
        main(standalone_mode=False)
    except click.ClickException as e:
        e.show()
        sys.exit(e.exit_code)
    except click.Abort:
        sys.exit(1)
    except ValidationError as e:
        click.echo(f"validation error: {e}", err=True)
        sys.exit(2)
    except ClusterCostError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    run()
