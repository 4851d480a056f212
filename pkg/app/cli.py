from pathlib import Path
from typing import List, Optional
import numpy as np
import typer
from rich.console import Console
from rich.table import Table
from app.config import logger, settings
from app.errors import SpinallocError
from app.models.base import DeltaMode, NetworkModel, SolverName
from app.models.factorGraph import FactorGraph
from app.models.network import NetworkGraph
from app.schemas import ChannelParams, SpParams
from app.services import experimentService
from app.services.metricsService import all_pairs_hops, delta_hyperbolicity, interference_links

cli = typer.Typer(name="spinalloc", help="Channel allocation by survey propagation.",
                  no_args_is_help=True, add_completion=False)
console = Console()
err_console = Console(stderr=True)

DEFAULT_MEAN_DEGREE = 4.5


def _fail(e: Exception) -> None:
    logger.warning(f"Command failed: {e}")
    err_console.print(f"[bold red]error:[/bold red] {e}")
    raise typer.Exit(code=1)


def _load_or_generate(graph: Optional[Path], model: NetworkModel, stations: int,
                      edge_prob: Optional[float], mu_dbm: Optional[float], seed: int) -> NetworkGraph:
    if graph is not None:
        return NetworkGraph.parse_edge_list(graph.read_text(encoding="utf-8"))
    rng = np.random.default_rng(seed)
    if model == NetworkModel.er:
        p = edge_prob if edge_prob is not None else min(1.0, DEFAULT_MEAN_DEGREE / stations)
        return NetworkGraph.generate_erdos_renyi(stations, p, rng)
    mu = mu_dbm if mu_dbm is not None else settings.mu_dbm
    return NetworkGraph.generate_geometric(stations, ChannelParams(mu_dbm=mu), rng)


@cli.command()
def generate(model: NetworkModel = typer.Option(NetworkModel.er, "--model", help="er or geo"),
             stations: int = typer.Option(100, "--stations", min=1, help="n (er) or Poisson mean (geo)"),
             edge_prob: Optional[float] = typer.Option(None, "--edge-prob", min=0.0, max=1.0),
             mu_dbm: Optional[float] = typer.Option(None, "--mu-dbm"),
             seed: int = typer.Option(0, "--seed", min=0),
             out: Optional[Path] = typer.Option(None, "--out", help="file for the edge list")) -> None:
    """Draw a network and print or write its edge list."""
    try:
        g = _load_or_generate(None, model, stations, edge_prob, mu_dbm, seed)
        text = g.write_edge_list()
        if out is None:
            typer.echo(text, nl=False)
            return
        out.write_text(text, encoding="utf-8")
    except (SpinallocError, ValueError, OSError) as e:
        _fail(e)
    avg_degree, degree_std = g.degree_stats()
    console.print(f"wrote {out}: n={g.n}, |E|={len(g.edges)}, "
                  f"degree {avg_degree:.3f} ± {degree_std:.3f}")


@cli.command()
def solve(graph: Optional[Path] = typer.Option(None, "--graph", help="edge list to solve"),
          model: NetworkModel = typer.Option(NetworkModel.er, "--model"),
          stations: int = typer.Option(100, "--stations", min=1),
          edge_prob: Optional[float] = typer.Option(None, "--edge-prob", min=0.0, max=1.0),
          mu_dbm: Optional[float] = typer.Option(None, "--mu-dbm"),
          pools: int = typer.Option(4, "--pools", min=1),
          solver: SolverName = typer.Option(SolverName.sp, "--solver"),
          seed: int = typer.Option(0, "--seed", min=0),
          out: Optional[Path] = typer.Option(None, "--out", help="file for the station,pool CSV")) -> None:
    """Allocate pools on a network read with --graph or drawn from --model."""
    try:
        g = _load_or_generate(graph, model, stations, edge_prob, mu_dbm, seed)
        allocation, stats = experimentService.run_solver(
            solver.value, g, pools, SpParams(),
            np.random.default_rng(experimentService.derive_seed(seed, solver.code)))
        scorer = FactorGraph.build_csp(g, pools)
        csv_text = allocation.to_csv()
        if out is not None:
            out.write_text(csv_text, encoding="utf-8")
        else:
            typer.echo(csv_text, nl=False)
    except (SpinallocError, ValueError, OSError) as e:
        _fail(e)

    table = Table(title=f"{solver.value} on n={g.n}, |E|={len(g.edges)}, Q={pools}")
    table.add_column("quantity")
    table.add_column("value", justify="right")
    table.add_row("interference links", str(interference_links(g, allocation)))
    table.add_row("zero interference", "yes" if scorer.is_zero_interference(allocation) else "no")
    table.add_row("decimation steps", str(stats.decimation_steps))
    table.add_row("restarts", str(stats.restarts))
    table.add_row("greedy fallback", "yes" if stats.fallback_used else "no")
    table.add_row("contradictions", str(stats.contradictions))
    table.add_row("runtime (ms)", f"{stats.runtime_ms:.1f}")
    err_console.print(table)


@cli.command()
def experiment(config: Optional[Path] = typer.Option(None, "--config", help="JSON experiment config"),
               preset: Optional[str] = typer.Option(None, "--preset"),
               seed: Optional[int] = typer.Option(None, "--seed", min=0),
               out: Path = typer.Option(Path("results"), "--out"),
               solver: Optional[List[SolverName]] = typer.Option(None, "--solver"),
               model: Optional[NetworkModel] = typer.Option(None, "--model"),
               stations: Optional[List[int]] = typer.Option(None, "--stations"),
               pools: Optional[List[int]] = typer.Option(None, "--pools"),
               mu_dbm: Optional[float] = typer.Option(None, "--mu-dbm"),
               z: Optional[int] = typer.Option(None, "--z", min=1),
               workers: Optional[int] = typer.Option(None, "--workers", min=1)) -> None:
    """Run a seeded experiment and write records.csv, summary.csv and figures.gp."""
    overrides = {
        "master_seed": seed,
        "solvers": [s.value for s in solver] if solver else None,
        "model": model.value if model is not None else None,
        "i_values": stations or None,
        "q_values": pools or None,
        "mu_dbm": mu_dbm,
        "z": z,
        "workers": workers,
        "out_dir": str(out),
    }
    try:
        cfg = experimentService.load_config(config, overrides, preset)
        records = experimentService.run_experiment(cfg)
        summary = experimentService.aggregate(records)
        experimentService.emit_outputs(records, summary, out)
    except (SpinallocError, ValueError, OSError) as e:
        _fail(e)

    table = Table(title=f"{cfg.model} experiment, z={cfg.z}")
    for column in ("I", "Q", "mu", "solver", "zero %", "links", "std"):
        table.add_column(column, justify="right")
    for row in summary:
        table.add_row(str(row.i_target), str(row.q), "" if row.mu_dbm is None else f"{row.mu_dbm:g}",
                      row.solver, f"{row.zero_rate_pct:.1f}", f"{row.mean_conflicts:.3f}",
                      f"{row.std_conflicts:.3f}")
    console.print(table)
    console.print(f"outputs written to {out}")


@cli.command()
def hyperbolicity(graph: Optional[Path] = typer.Option(None, "--graph"),
                  model: NetworkModel = typer.Option(NetworkModel.er, "--model"),
                  stations: int = typer.Option(50, "--stations", min=1),
                  edge_prob: Optional[float] = typer.Option(None, "--edge-prob", min=0.0, max=1.0),
                  mu_dbm: Optional[float] = typer.Option(None, "--mu-dbm"),
                  seed: int = typer.Option(0, "--seed", min=0),
                  samples: Optional[int] = typer.Option(None, "--samples", min=1,
                                                        help="sample quadruples instead of enumerating")) -> None:
    """Print the Gromov delta, component count and diameter of a network."""
    try:
        g = _load_or_generate(graph, model, stations, edge_prob, mu_dbm, seed)
        if samples is None:
            delta = delta_hyperbolicity(g, DeltaMode.exact)
        else:
            delta = delta_hyperbolicity(g, DeltaMode.sampled, samples,
                                        np.random.default_rng(experimentService.derive_seed(seed)))
    except (SpinallocError, ValueError, OSError) as e:
        _fail(e)
    distances = all_pairs_hops(g)
    console.print(f"delta={delta:g} components={distances.component_count()} "
                  f"diameter={distances.diameter()}")
