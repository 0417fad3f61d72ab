from dotenv import load_dotenv
load_dotenv()

import sys
import traceback
from pathlib import Path
from typing import Optional

import typer
from rich.console import Console
from rich.table import Table

from engine.errors import ConfigError, YBError
from engine.lattice import Site, StaircaseState, transfer_evolve
from engine.map_registry import get_map, map_ids
from engine.matrix_core import vector_from_json, vector_to_json
from engine.run_config import load_config
from engine.verification import evaluate_point, run_suite, surface_scan

from services.logging_service import get_logger
from services.report_service import ReportService


# ====================================
# APP INITIALIZATION
# ====================================

app = typer.Typer(
    name="yb",
    help="Parametric Yang-Baxter maps from binomial Lax matrices: evaluate, verify, evolve.",
    no_args_is_help=True,
    add_completion=False
)

console = Console(stderr=True)

DEFAULT_TRAJECTORY_CSV = "trajectory.csv"
DEFAULT_SURFACE_CSV = "surface.csv"

EXIT_PASS = 0
EXIT_FAIL = 1


def _emit(kind, document, path):

    reports = ReportService()

    if path:
        reports.write_json(kind, document, path)
        console.print(f"report written to [bold]{path}[/bold]")
    else:
        sys.stdout.write(reports.render(kind, document).decode())


def _guarded(command, body):
    """Run a command body and map its outcome onto the process exit code."""

    logger = get_logger()

    try:
        code = body()

    except YBError as e:

        event = "CONFIG_ERROR" if isinstance(e, ConfigError) else "RUN_ERROR"
        logger.log(event, {"command": command, **e.to_dict()})

        sys.stdout.write(ReportService().render("error", {"command": command, "error": e.to_dict()}).decode())
        console.print(f"[red]{type(e).__name__}[/red]: {e.message}")

        raise typer.Exit(e.exit_code)

    except Exception as e:

        traceback.print_exc()
        logger.log("UNEXPECTED_ERROR", {"command": command, "error": str(e), "traceback": traceback.format_exc()})

        raise typer.Exit(EXIT_FAIL)

    raise typer.Exit(code)


def _status(passed):
    return "[green]PASS[/green]" if passed else "[red]FAIL[/red]"


# ====================================
# VERIFY
# ====================================

@app.command()
def verify(
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="JSON run configuration"),
    map_id: Optional[str] = typer.Option(None, "--map", help="map id, overrides the config"),
    seed: Optional[int] = typer.Option(None, "--seed"),
    samples: Optional[int] = typer.Option(None, "--samples"),
    workers: Optional[int] = typer.Option(None, "--workers"),
    out: Optional[Path] = typer.Option(None, "--out", help="report path (stdout when omitted)")
):
    """Run the property suites of one map and write a JSON report."""

    def body():

        cfg = load_config(config, {
            "command": "verify",
            "map": map_id,
            "seed": seed,
            "samples": samples,
            "workers": workers,
            "out": str(out) if out else None
        })

        report = run_suite(
            cfg.map,
            cfg.samples,
            cfg.seed,
            cfg.tolerances.model_dump(),
            cfg.workers,
            progress=sys.stderr.isatty()
        )

        table = Table(title=f"verify {cfg.map} (seed {cfg.seed}, {cfg.samples} samples)")

        for column in ("check", "statistic", "value", "tolerance", "rejected", "status"):
            table.add_column(column)

        for check in report.checks:
            table.add_row(
                check.name,
                check.statistic,
                f"{check.value:.3e}",
                f"{check.tolerance:.1e}",
                str(check.rejected),
                _status(check.passed)
            )

        console.print(table)

        _emit("verify", report.to_dict(), cfg.out)

        return EXIT_PASS if report.passed else EXIT_FAIL

    _guarded("verify", body)


# ====================================
# EVALUATE
# ====================================

@app.command()
def evaluate(
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="JSON run configuration with x, alpha, y, beta"),
    map_id: Optional[str] = typer.Option(None, "--map"),
    seed: Optional[int] = typer.Option(None, "--seed"),
    samples: Optional[int] = typer.Option(None, "--samples"),
    out: Optional[Path] = typer.Option(None, "--out")
):
    """Apply a map once to the point (x, y) with parameters (alpha, beta)."""

    def body():

        cfg = load_config(config, {
            "command": "evaluate",
            "map": map_id,
            "seed": seed,
            "samples": samples,
            "out": str(out) if out else None
        })

        try:
            x, y = cfg.vector("x"), cfg.vector("y")
            alpha, beta = cfg.vector("alpha"), cfg.vector("beta")
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError("malformed input vector", {"error": str(e)}) from None

        u, v = evaluate_point(cfg.map, x, alpha, y, beta)

        _emit("evaluate", {
            "command": "evaluate",
            "map": cfg.map,
            "seed": cfg.seed,
            "x": vector_to_json(x),
            "y": vector_to_json(y),
            "alpha": vector_to_json(alpha),
            "beta": vector_to_json(beta),
            "u": vector_to_json(u),
            "v": vector_to_json(v)
        }, cfg.out)

        return EXIT_PASS

    _guarded("evaluate", body)


# ====================================
# LATTICE
# ====================================

def _sites(configs):

    try:
        return tuple(Site(vector_from_json(s.coords), vector_from_json(s.params)) for s in configs)
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError("malformed lattice site", {"error": str(e)}) from None


@app.command()
def lattice(
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="JSON run configuration with x_sites, y_sites"),
    map_id: Optional[str] = typer.Option(None, "--map", help="map id, overrides the config"),
    steps: Optional[int] = typer.Option(None, "--steps"),
    seed: Optional[int] = typer.Option(None, "--seed"),
    samples: Optional[int] = typer.Option(None, "--samples"),
    out: Optional[Path] = typer.Option(None, "--out", help="trajectory CSV"),
    report_out: Optional[Path] = typer.Option(None, "--report-out", help="drift report (stdout when omitted)")
):
    """Evolve a periodic staircase under the transfer map."""

    def body():

        cfg = load_config(config, {
            "command": "lattice",
            "map": map_id,
            "seed": seed,
            "samples": samples,
            "steps": steps,
            "out": str(out) if out else None,
            "report_out": str(report_out) if report_out else None
        })

        descriptor = get_map(cfg.map)
        state = StaircaseState(cfg.map, _sites(cfg.x_sites), _sites(cfg.y_sites))

        evolution = transfer_evolve(state, cfg.steps)

        ReportService().write_trajectory(
            evolution.trajectory,
            descriptor.coord_names,
            cfg.out or DEFAULT_TRAJECTORY_CSV
        )

        tolerance = cfg.tolerances.drift
        drifts = [evolution.max_coeff_drift, evolution.j1_drift, evolution.j2_drift]
        passed = all(d <= tolerance for d in drifts if d is not None)

        console.print(
            f"{cfg.map}: {evolution.steps} steps, max coefficient drift "
            f"{evolution.max_coeff_drift:.3e} {_status(passed)}"
        )

        _emit("lattice", {
            "command": "lattice",
            "map": cfg.map,
            "seed": cfg.seed,
            "tolerance": tolerance,
            "passed": passed,
            **evolution.to_dict()
        }, cfg.report_out)

        return EXIT_PASS if passed else EXIT_FAIL

    _guarded("lattice", body)


# ====================================
# SURFACE SCAN
# ====================================

@app.command("surface-scan")
def surface_scan_command(
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="JSON run configuration with a grid"),
    curve: Optional[str] = typer.Option(None, "--curve", help="boussinesq or gv"),
    seed: Optional[int] = typer.Option(None, "--seed"),
    samples: Optional[int] = typer.Option(None, "--samples", help="random constrained matrices"),
    out: Optional[Path] = typer.Option(None, "--out", help="CSV path")
):
    """Casimir triples and discriminant residuals along a curve or at random leaf matrices."""

    def body():

        cfg = load_config(config, {"command": "surface-scan", "seed": seed, "out": str(out) if out else None})

        grid = cfg.grid.model_copy(update={
            k: v for k, v in (("curve", curve), ("samples", samples)) if v is not None
        })

        rows = surface_scan(grid.curve, grid.alphas, grid.samples, cfg.seed)
        path = ReportService().write_surface(rows, cfg.out or DEFAULT_SURFACE_CSV)

        worst = max((row[3] for row in rows), default=0.0)
        passed = worst <= cfg.tolerances.surface

        console.print(f"{len(rows)} rows written to [bold]{path}[/bold], worst residual {worst:.3e} {_status(passed)}")

        return EXIT_PASS if passed else EXIT_FAIL

    _guarded("surface-scan", body)


# ====================================
# MAPS / LOGS
# ====================================

@app.command()
def maps():
    """List the known map ids."""

    table = Table(title="maps")

    for column in ("id", "coordinates", "parameters", "bracket"):
        table.add_column(column)

    for map_id in map_ids():
        d = get_map(map_id)
        table.add_row(map_id, ", ".join(d.coord_names), str(d.param_dim), "yes" if d.structure else "no")

    Console().print(table)


@app.command()
def logs(limit: int = typer.Option(20, "--limit", min=1)):
    """Event histogram and the most recent events of the event log."""

    logger = get_logger()
    out = Console()

    counts = Table(title="events")
    counts.add_column("event_type")
    counts.add_column("count", justify="right")

    for event_type, count in logger.event_counts().most_common():
        counts.add_row(event_type, str(count))

    out.print(counts)

    recent = Table(title=f"last {limit}")
    recent.add_column("timestamp")
    recent.add_column("event_type")
    recent.add_column("details")

    for event in logger.recent(limit):
        recent.add_row(event["timestamp"], event["event_type"], str(event["details"]))

    out.print(recent)


if __name__ == "__main__":
    app()
