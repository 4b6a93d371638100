"""Command-line interface for the fund contagion toolkit.

Exit codes: 0 ok, 2 usage, 3 I/O, 4 validation.
"""

import functools
import json
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import click
from pydantic import ValidationError
from rich.console import Console
from rich.progress import BarColumn, Progress, SpinnerColumn, TextColumn
from rich.table import Table

from src.config import settings
from src.core.exceptions import (
    DegenerateLabels,
    FundNetError,
    GraphError,
    InfeasibleTargets,
    SweepError,
    UnknownAsset,
    UnknownParameter,
)
from src.utils import get_logger, setup_logging

console = Console(stderr=True)
logger = get_logger(__name__)

EXIT_USAGE = 2
EXIT_IO = 3
EXIT_VALIDATION = 4


def exit_code(error: BaseException) -> int:
    """Map an exception to the CLI exit-code scheme."""
    usage = (ValidationError, InfeasibleTargets, UnknownAsset, UnknownParameter, SweepError)
    if isinstance(error, usage):
        return EXIT_USAGE
    if isinstance(error, OSError):
        return EXIT_IO
    return EXIT_VALIDATION


def handle_errors(command: Callable) -> Callable:
    """Report toolkit errors on standard error and exit with the mapped code."""
    @functools.wraps(command)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return command(*args, **kwargs)
        except (FundNetError, ValidationError, OSError) as e:
            code = exit_code(e)
            label = {EXIT_USAGE: "Usage error", EXIT_IO: "I/O error"}.get(code, "Validation error")
            console.print(f"[bold red]{label}:[/bold red] {e}")
            logger.debug(f"{type(e).__name__} -> exit {code}")
            sys.exit(code)
    return wrapper


def prepare_output(directory: Path, names: Sequence[str], force: bool) -> Path:
    """
    Create ``directory`` and refuse to clobber ``names`` unless forced.

    Raises:
        FileExistsError
    """
    existing = [name for name in names if (directory / name).exists()]
    if existing and not force:
        raise FileExistsError(
            f"{directory} already holds {', '.join(existing)}; pass --force to overwrite"
        )
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def _default_out(name: str) -> Path:
    return Path(settings.output_dir) / name


def _scenario_options(command: Callable) -> Callable:
    options = [
        click.option("--shock-assets", default=None, help="Comma-separated asset ids to shock"),
        click.option("--preset", type=click.Choice(["severe", "mild"]), default=None,
                     help="Start from a preset scenario"),
        click.option("--beta-rate", default=None, help="Failure-cost rate"),
        click.option("--omega", default=None, help="Fire-sale pressure"),
        click.option("--allow-cash", is_flag=True, help="Allow shocking cash assets"),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def _scenario(
    preset: Optional[str],
    shock_assets: Optional[str],
    eta: Optional[float],
    crit_rate: Optional[float],
    beta_rate: Optional[float],
    omega: Optional[float],
    allow_cash: bool,
    max_iterations: Optional[int] = None,
):
    from src.core.contagion import PRESETS, ScenarioConfig

    values: Dict[str, Any] = PRESETS[preset].model_dump() if preset else {}
    overrides = {
        "shocked_assets": shock_assets,
        "eta": eta,
        "crit_rate": crit_rate,
        "beta_rate": beta_rate,
        "omega": omega,
        "max_iterations": max_iterations,
    }
    values.update({k: v for k, v in overrides.items() if v is not None})
    if allow_cash:
        values["allow_cash"] = True
    for required in ("shocked_assets", "eta", "crit_rate"):
        if required not in values:
            raise click.UsageError(f"--{required.replace('_', '-')} is required without --preset")
    return ScenarioConfig(**values)


def _print_table(title: str, rows: Dict[str, Any]) -> None:
    table = Table(title=title)
    table.add_column("Field", style="cyan")
    table.add_column("Value", justify="right")
    for key, value in rows.items():
        table.add_row(key, f"{value:.6g}" if isinstance(value, float) else str(value))
    console.print(table)


@click.group()
@click.option("--log-level", default=None, help="Logging level (DEBUG, INFO, WARNING, ERROR)")
@click.option("--log-file", default=None, help="Optional log file")
def cli(log_level: Optional[str], log_file: Optional[str]):
    """Fund contagion toolkit: generate markets, measure networks, simulate cascades."""
    if log_level or log_file:
        setup_logging(log_level, log_file)


@cli.command()
@click.option("--funds", "n_funds", type=click.IntRange(min=1), required=True, help="Fund count")
@click.option("--assets", "n_assets", type=click.IntRange(min=1), required=True, help="Asset count")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--mean-cross-degree", type=float, default=4.34, show_default=True)
@click.option("--mean-asset-degree", type=float, default=20.23, show_default=True)
@click.option("--dominant-share", type=float, default=0.35, show_default=True)
@click.option("--closed-fraction", type=float, default=0.0, show_default=True)
@click.option("--no-cash", is_flag=True, help="Leave the CASH asset out")
@click.option("--date", default="synthetic", show_default=True)
@click.option("--periods", type=click.IntRange(min=1), default=1, show_default=True,
              help="Write a series of bundles, one sub-directory per period")
@click.option("--churn", type=click.FloatRange(0.0, 1.0), default=0.0, show_default=True)
@click.option("--out", type=click.Path(path_type=Path), default=None)
@click.option("--force", is_flag=True, help="Overwrite existing bundle files")
@handle_errors
def generate(
    n_funds: int,
    n_assets: int,
    seed: int,
    mean_cross_degree: float,
    mean_asset_degree: float,
    dominant_share: float,
    closed_fraction: float,
    no_cash: bool,
    date: str,
    periods: int,
    churn: float,
    out: Optional[Path],
    force: bool,
):
    """Generate a synthetic market bundle."""
    from src.core.ingest import GeneratorConfig, generate_market, save_snapshot, synthetic_series

    config = GeneratorConfig(
        n_funds=n_funds,
        n_assets=n_assets,
        seed=seed,
        mean_cross_degree=mean_cross_degree,
        mean_asset_degree=mean_asset_degree,
        dominant_share=dominant_share,
        closed_fraction=closed_fraction,
        include_cash=not no_cash,
        date=date,
    )
    out = out or _default_out("market")

    with Progress(SpinnerColumn(), TextColumn("[progress.description]{task.description}"),
                  console=console) as progress:
        task = progress.add_task("Generating market...", total=None)
        if periods == 1:
            snapshots = [generate_market(config)]
            targets = [out]
        else:
            snapshots = synthetic_series(config, periods, churn=churn)
            targets = [out / s.date for s in snapshots]
        for snapshot, target in zip(snapshots, targets):
            save_snapshot(snapshot, target, force=force)
        progress.update(task, completed=True)

    summary = snapshots[0].summary()
    _print_table("Generated market", {**summary, "bundles": len(targets), "out": str(out)})


@cli.command()
@click.argument("bundles", nargs=-1, required=True, type=click.Path(path_type=Path))
@click.option("--series", is_flag=True, help="Treat the bundles as a time series")
@click.option("--assortativity-by", multiple=True, default=("administrator", "class"),
              show_default=True, help="Fund label column (repeatable)")
@click.option("--histogram-kind", type=click.Choice(["in", "out", "bipartite-fund", "bipartite-asset"]),
              default="in", show_default=True)
@click.option("--betweenness-samples", type=click.IntRange(min=1), default=None,
              help="Sample sources for betweenness on large networks")
@click.option("--no-bipartite", is_flag=True, help="Skip fund-asset centralities")
@click.option("--out", type=click.Path(path_type=Path), default=None)
@click.option("--force", is_flag=True)
@handle_errors
def metrics(
    bundles: Sequence[Path],
    series: bool,
    assortativity_by: Sequence[str],
    histogram_kind: str,
    betweenness_samples: Optional[int],
    no_bipartite: bool,
    out: Optional[Path],
    force: bool,
):
    """Network reports for a bundle (stability across bundles with --series)."""
    from src.core.ingest import load_bundle, load_series, stability_graphs
    from src.core.metrics import (
        assortativity,
        average_path_length,
        bipartite_as_digraph,
        bipartite_centrality,
        bipartite_summary,
        centrality_report,
        degree_histogram,
        histogram_frame,
        jaccard_stability,
        network_summary,
        series_growth,
    )

    if series and len(bundles) < 2:
        raise click.UsageError("--series needs at least two bundles")
    names = ["centrality.csv", "histogram.csv", "summary.json"]
    if not no_bipartite:
        names.append("centrality_bipartite.csv")
    if series:
        names += ["stability.csv", "growth.csv"]
    out = prepare_output(out or _default_out("metrics"), names, force)

    snapshots = load_series(bundles) if series else [load_bundle(bundles[0])]
    snapshot = snapshots[0]
    cross = snapshot.cross_holdings.to_graph()
    fund_asset = snapshot.holdings.to_graph()

    report = centrality_report(cross, betweenness_samples=betweenness_samples, seed=0)
    report.to_frame().to_csv(out / "centrality.csv", index=False, lineterminator="\n")
    graph = fund_asset if histogram_kind.startswith("bipartite") else cross
    histogram_frame(degree_histogram(graph, histogram_kind)).to_csv(
        out / "histogram.csv", index=False, lineterminator="\n"
    )

    summary: Dict[str, Any] = {
        "bundles": [str(b) for b in bundles],
        "date": snapshot.date,
        "cross_holdings": network_summary(cross, report).to_dict(),
        "centrality_notes": report.notes,
        "assortativity": {},
    }
    bipartite_report = None
    if not no_bipartite:
        bipartite_report = bipartite_centrality(
            fund_asset, betweenness_samples=betweenness_samples, seed=0
        )
        bipartite_report.to_frame().to_csv(
            out / "centrality_bipartite.csv", index=False, lineterminator="\n"
        )
    summary["fund_asset"] = bipartite_summary(
        fund_asset, bipartite_report, exclude_assets=snapshot.cash_assets()
    ).to_dict()
    top = summary["fund_asset"]["extra"].get("most_held_asset")
    if top is not None:
        node = fund_asset.fund_count + fund_asset.asset_ids.index(top)
        summary["fund_asset"]["extra"]["most_held_average_path"] = average_path_length(
            bipartite_as_digraph(fund_asset), node
        )

    for column in assortativity_by:
        try:
            labels = snapshot.fund_labels(column)
        except KeyError as e:
            raise click.UsageError(str(e)) from e
        try:
            summary["assortativity"][column] = assortativity(cross, labels)
        except (DegenerateLabels, GraphError) as e:
            logger.warning(f"Assortativity by {column} undefined: {e}")
            summary["assortativity"][column] = None

    if series:
        graphs = stability_graphs(snapshots)
        periods = [s.date for s in snapshots]
        stability = jaccard_stability(graphs, periods)
        stability.to_frame().to_csv(out / "stability.csv", index=False, lineterminator="\n")
        series_growth(graphs, periods).to_csv(out / "growth.csv", index=False, lineterminator="\n")
        summary["stability"] = {
            "mean_node_jaccard": stability.mean_node_jaccard,
            "mean_edge_jaccard": stability.mean_edge_jaccard,
        }

    (out / "summary.json").write_text(json.dumps(summary, indent=2, default=str) + "\n")

    cross_summary = summary["cross_holdings"]
    _print_table(
        f"Network metrics ({snapshot.date})",
        {
            "funds": cross_summary["nodes"],
            "cross-holdings": cross_summary["edges"],
            "average degree": cross_summary["average_degree"],
            "density": cross_summary["density"],
            **{f"assortativity[{k}]": v for k, v in summary["assortativity"].items()},
            "out": str(out),
        },
    )


@cli.command()
@click.argument("bundle", type=click.Path(path_type=Path))
@_scenario_options
@click.option("--eta", type=float, default=None, help="Fraction of value shocked assets keep")
@click.option("--crit-rate", type=float, default=None, help="Critical value rate")
@click.option("--max-iterations", type=click.IntRange(min=1), default=None)
@click.option("--out", type=click.Path(path_type=Path), default=None)
@click.option("--force", is_flag=True)
@handle_errors
def simulate(
    bundle: Path,
    shock_assets: Optional[str],
    preset: Optional[str],
    beta_rate: Optional[str],
    omega: Optional[str],
    allow_cash: bool,
    eta: Optional[float],
    crit_rate: Optional[float],
    max_iterations: Optional[int],
    out: Optional[Path],
    force: bool,
):
    """Run one cascade and write its trajectory and summary."""
    from src.core.contagion import run_cascade
    from src.core.ingest import load_bundle

    config = _scenario(
        preset, shock_assets, eta, crit_rate,
        _float(beta_rate, "--beta-rate"), _float(omega, "--omega"), allow_cash, max_iterations,
    )
    out = prepare_output(out or _default_out("simulation"), ["cascade.json", "summary.csv"], force)
    snapshot = load_bundle(bundle)

    result = run_cascade(snapshot, config)
    (out / "cascade.json").write_text(result.to_json() + "\n", encoding="utf-8")
    result.summary_frame().to_csv(out / "summary.csv", index=False, lineterminator="\n")

    row = result.summary_row()
    _print_table(
        "Cascade",
        {
            "initial failures": row["initial_failures"],
            "final failures": row["final_failures"],
            "open funds": int(snapshot.open_ended.sum()),
            "iterations": row["iterations"],
            "value lost": row["total_value_lost"],
            "termination": row["termination_reason"],
        },
    )


def _float(text: Optional[str], flag: str) -> Optional[float]:
    if text is None:
        return None
    try:
        return float(text)
    except ValueError:
        raise click.BadParameter(f"'{text}' is not a number", param_hint=flag) from None


def _values(text: Optional[str], flag: str) -> Optional[List[float]]:
    from src.core.sweep import parse_values

    if text is None:
        return None
    try:
        return parse_values(text)
    except SweepError as e:
        raise click.BadParameter(str(e), param_hint=flag) from None


@cli.command()
@click.argument("bundle", type=click.Path(path_type=Path))
@_scenario_options
@click.option("--eta", default=None, help="Comma-separated eta values")
@click.option("--crit-rate", default=None, help="Comma-separated critical value rates")
@click.option("--jobs", type=click.IntRange(min=1), default=None, help="Worker processes")
@click.option("--heatmap", multiple=True, help="x,y,z triple (repeatable)")
@click.option("--seed", type=int, default=None, help="Seed recorded in the manifest and spot checks")
@click.option("--spot-check", type=click.IntRange(min=0), default=0,
              help="Re-run this many random rows independently")
@click.option("--out", type=click.Path(path_type=Path), default=None)
@click.option("--force", is_flag=True)
@handle_errors
def sweep(
    bundle: Path,
    shock_assets: Optional[str],
    preset: Optional[str],
    beta_rate: Optional[str],
    omega: Optional[str],
    allow_cash: bool,
    eta: Optional[str],
    crit_rate: Optional[str],
    jobs: Optional[int],
    heatmap: Sequence[str],
    seed: Optional[int],
    spot_check: int,
    out: Optional[Path],
    force: bool,
):
    """Run a grid of cascades (comma-separated values per rate)."""
    from src.core.ingest import load_bundle
    from src.core.sweep import SweepSpec, heatmap_export, run_sweep, spot_check as check_rows

    eta_values = _values(eta, "--eta")
    crit_values = _values(crit_rate, "--crit-rate")
    beta_values = _values(beta_rate, "--beta-rate")
    omega_values = _values(omega, "--omega")
    base = _scenario(
        preset,
        shock_assets,
        eta_values[0] if eta_values else None,
        crit_values[0] if crit_values else None,
        beta_values[0] if beta_values else None,
        omega_values[0] if omega_values else None,
        allow_cash,
    )
    spec = SweepSpec(
        base=base,
        eta_values=eta_values,
        crit_values=crit_values,
        beta_values=beta_values,
        omega_values=omega_values,
        jobs=jobs or settings.sweep_jobs,
        snapshot_ref=str(bundle),
        seed=seed,
    )

    triples = []
    for text in heatmap:
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 3:
            raise click.BadParameter(f"'{text}' is not an x,y,z triple", param_hint="--heatmap")
        triples.append(parts)

    names = ["sweep.csv", "manifest.json"] + [f"heatmap_{z}.csv" for _, _, z in triples]
    out = prepare_output(out or _default_out("sweep"), names, force)
    snapshot = load_bundle(bundle)

    with Progress(
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        TextColumn("{task.completed}/{task.total}"),
        console=console,
    ) as progress:
        task = progress.add_task("Sweeping...", total=spec.grid_size)
        result = run_sweep(
            snapshot, spec, progress=lambda done, total: progress.update(task, completed=done)
        )

    if spot_check:
        check_rows(snapshot, result, count=spot_check, seed=seed or 0)
    result.to_csv(out / "sweep.csv")
    for x, y, z in triples:
        heatmap_export(result, x, y, z, directory=out)
    result.write_manifest(out / "manifest.json")

    _print_table(
        "Sweep",
        {"grid points": spec.grid_size, "errors": result.errors,
         "elapsed (s)": result.elapsed, "out": str(out)},
    )


@cli.command()
@click.argument("bundle", type=click.Path(path_type=Path))
@click.option("--eta", type=float, required=True, help="Fraction of value the shocked asset keeps")
@click.option("--crit-rate", type=float, required=True)
@click.option("--beta-rate", type=float, default=0.0, show_default=True)
@click.option("--omega", type=float, default=0.0, show_default=True)
@click.option("--assets", default=None, help="Comma-separated assets to scan (default: all non-cash)")
@click.option("--top", type=click.IntRange(min=1), default=10, show_default=True)
@click.option("--out", type=click.Path(path_type=Path), default=None)
@click.option("--force", is_flag=True)
@handle_errors
def scan(
    bundle: Path,
    eta: float,
    crit_rate: float,
    beta_rate: float,
    omega: float,
    assets: Optional[str],
    top: int,
    out: Optional[Path],
    force: bool,
):
    """Rank assets by the cascade a shock to each one alone triggers."""
    from src.core.contagion import ScenarioConfig, asset_impact_scan, impact_frame
    from src.core.ingest import load_bundle

    snapshot = load_bundle(bundle)
    targets = [a.strip() for a in assets.split(",") if a.strip()] if assets else None
    base = ScenarioConfig(
        shocked_assets=(targets or list(snapshot.assets.ids))[:1],
        eta=eta,
        crit_rate=crit_rate,
        beta_rate=beta_rate,
        omega=omega,
    )
    out = prepare_output(out or _default_out("scan"), ["impact.csv"], force)

    impacts = asset_impact_scan(snapshot, base, assets=targets)
    impact_frame(impacts).to_csv(out / "impact.csv", index=False, lineterminator="\n")

    table = Table(title="Most damaging single-asset shocks")
    table.add_column("Asset", style="cyan")
    table.add_column("Initial", justify="right")
    table.add_column("Final", justify="right")
    table.add_column("Value lost", justify="right")
    for impact in impacts[:top]:
        table.add_row(
            impact.asset_id,
            str(impact.initial_failures),
            str(impact.final_failures),
            f"{impact.total_value_lost:.6g}",
        )
    console.print(table)


def main():
    cli()


if __name__ == "__main__":
    main()
