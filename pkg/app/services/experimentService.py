import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple
import numpy as np
import pandas as pd
from pydantic import ValidationError
from app.config import logger, settings
from app.errors import ConfigError, EmptyInputError
from app.models.base import DeltaMode, GreedyOrder, SolverName
from app.models.factorGraph import Allocation, FactorGraph
from app.models.network import NetworkGraph
from app.schemas import (ALL_SOLVERS, PRESETS, ChannelParams, ExperimentConfig, ExperimentRecord,
                         SolveStats, SpParams, SummaryRow)
from app.services.baselineService import BeliefPropagationService, GreedyService
from app.services.metricsService import delta_hyperbolicity, interference_links
from app.services.surveyService import SurveyService

_MASK64 = (1 << 64) - 1
MODEL_CODES = {"er": 1, "geo": 2}
DELTA_TAG = 0

RECORD_COLUMNS = list(ExperimentRecord.model_fields)
SUMMARY_COLUMNS = list(SummaryRow.model_fields)
_BOOL_COLUMNS = ["zero_interference", "fallback_used"]

Solver = Callable[[NetworkGraph, int, SpParams, np.random.Generator], Tuple[Allocation, SolveStats]]

SOLVERS: Dict[str, Solver] = {
    SolverName.sp.value: lambda g, q, p, rng: SurveyService(p, rng).sp_allocate(g, q),
    SolverName.bp.value: lambda g, q, p, rng: BeliefPropagationService(p, rng).bp_allocate(g, q),
    SolverName.mnf.value: lambda g, q, p, rng: GreedyService(rng).solve(g, q, GreedyOrder.static_degree, "mnf"),
    SolverName.pmnf.value: lambda g, q, p, rng: GreedyService(rng).solve(g, q, GreedyOrder.progressive_degree, "pmnf"),
    SolverName.random.value: lambda g, q, p, rng: GreedyService(rng).solve(g, q, GreedyOrder.random, "random"),
}


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, *tags: int) -> int:
    """
    Mixes a 64-bit master seed with integer tags into a 64-bit seed.

    Each tag is xor-ed into the state and passed through one splitmix64 round,
    so (master, t1, t2) and (master, t2, t1) give unrelated seeds.

    Args:
        master_seed (int): The master seed.
        *tags (int): Non-negative integer tags.

    Returns:
        int: A seed in [0, 2**64).
    """
    state = _splitmix64(master_seed & _MASK64)
    for tag in tags:
        state = _splitmix64(state ^ (int(tag) & _MASK64))
    return state


def run_solver(name: str,
               g: NetworkGraph,
               q: int,
               params: SpParams,
               rng: np.random.Generator) -> Tuple[Allocation, SolveStats]:
    """
    Runs one of the registered solvers.

    Raises:
        ValueError: If the solver name is unknown.
    """
    if name not in SOLVERS:
        raise ValueError(f"unknown solver '{name}'")
    return SOLVERS[name](g, q, params, rng)


def load_config(path: Optional[Path] = None,
                overrides: Optional[Dict[str, Any]] = None,
                preset: Optional[str] = None) -> ExperimentConfig:
    """
    Builds an experiment configuration from a JSON file or a named preset,
    with non-None overrides applied on top.

    Raises:
        ConfigError: If the file cannot be read, the preset is unknown or
            the merged configuration does not validate.
    """
    data: Dict[str, Any] = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset '{preset}'")
        data.update(PRESETS[preset])
    if path is not None:
        logger.info(f"Loading experiment config from {path}")
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            logger.error(f"Cannot read config {path}: {e}")
            raise ConfigError(f"cannot read config {path}: {e}") from e
        try:
            loaded = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"config {path} is not valid JSON: {e}") from e
        if not isinstance(loaded, dict):
            raise ConfigError(f"config {path} must hold a JSON object")
        data.update(loaded)
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid config: {e}") from e


def _generate(cfg: ExperimentConfig, i_target: int, mu_dbm: Optional[float],
              rng: np.random.Generator) -> NetworkGraph:
    if cfg.model == "geo":
        return NetworkGraph.generate_geometric(i_target, ChannelParams(mu_dbm=mu_dbm), rng)
    n = i_target
    if cfg.station_count == "poisson":
        n = int(rng.poisson(i_target))
        while n == 0:
            n = int(rng.poisson(i_target))
    return NetworkGraph.generate_erdos_renyi(n, cfg.edge_prob(i_target), rng)


def _run_realization(task: Tuple[ExperimentConfig, int, int, Optional[float], int]) -> List[ExperimentRecord]:
    cfg, i_target, q, mu_dbm, r = task
    # mu is left out so a threshold sweep reuses positions and fading
    seed = derive_seed(cfg.master_seed, MODEL_CODES[cfg.model], i_target, q, r)
    g = _generate(cfg, i_target, mu_dbm, np.random.default_rng(seed))
    graph_hash = g.graph_hash()
    avg_degree, degree_std = g.degree_stats()

    delta: Optional[float] = None
    if cfg.compute_delta:
        mode = DeltaMode.exact if g.n <= settings.exact_delta_max_n else DeltaMode.sampled
        delta = delta_hyperbolicity(g, mode, cfg.delta_samples,
                                    np.random.default_rng(derive_seed(seed, DELTA_TAG)))

    scorer = FactorGraph.build_csp(g, q)
    records = []
    for name in [s for s in ALL_SOLVERS if s in cfg.solvers]:
        rng = np.random.default_rng(derive_seed(seed, SolverName(name).code))
        started = time.perf_counter()
        allocation, stats = run_solver(name, g, q, cfg.sp_params, rng)
        runtime_ms = (time.perf_counter() - started) * 1000.0
        links = interference_links(g, allocation)
        records.append(ExperimentRecord(
            model=cfg.model,
            i_target=i_target,
            i_actual=g.n,
            q=q,
            mu_dbm=mu_dbm,
            realization=r,
            solver=name,
            interference_links=links,
            zero_interference=scorer.is_zero_interference(allocation),
            cost=scorer.cost(allocation),
            avg_degree=avg_degree,
            degree_std=degree_std,
            delta=delta,
            sp_iterations=stats.decimation_steps,
            sp_restarts=stats.restarts,
            fallback_used=stats.fallback_used,
            runtime_ms=runtime_ms,
            seed=seed,
            graph_hash=graph_hash))
    return records


def run_experiment(cfg: ExperimentConfig) -> List[ExperimentRecord]:
    """
    Runs every configured solver on z seeded realizations per cell.

    Realization seeds derive from (master_seed, model, I, Q, r); every solver of
    a realization sees the same graph and gets its own sub-seed. Records come
    back ordered by (I, Q, mu, r, solver) whatever the worker count.

    Args:
        cfg (ExperimentConfig): A validated configuration.

    Returns:
        List[ExperimentRecord]: One record per (cell, realization, solver).
    """
    logger.info(f"Running {cfg.model} experiment: I={cfg.i_values}, Q={cfg.q_values}, "
                f"z={cfg.z}, solvers={cfg.solvers}, {cfg.run_count()} runs")
    tasks = [(cfg, i_target, q, mu_dbm, r)
             for i_target in cfg.i_values
             for q in cfg.q_values
             for mu_dbm in cfg.thresholds()
             for r in range(cfg.z)]

    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            batches = list(pool.map(_run_realization, tasks))
    else:
        batches = [_run_realization(task) for task in tasks]

    records = [record for batch in batches for record in batch]
    logger.debug(f"Experiment produced {len(records)} records")
    return records


def _records_frame(records: Sequence[ExperimentRecord]) -> pd.DataFrame:
    return pd.DataFrame([r.model_dump() for r in records], columns=RECORD_COLUMNS)


def aggregate(records: Sequence[ExperimentRecord]) -> List[SummaryRow]:
    """
    Per (model, I, Q, mu, solver) summary in first-appearance order.

    Std is the population standard deviation; mean_delta is None when no
    record of the group carries a delta.

    Raises:
        EmptyInputError: If there are no records.
    """
    if not records:
        raise EmptyInputError("no records to aggregate")
    frame = _records_frame(records)
    frame["zero_interference"] = frame["zero_interference"].astype(float)
    frame["delta"] = pd.to_numeric(frame["delta"], errors="coerce")
    grouped = frame.groupby(["model", "i_target", "q", "mu_dbm", "solver"], sort=False, dropna=False)
    table = grouped.agg(
        z=("interference_links", "size"),
        zero_rate_pct=("zero_interference", "mean"),
        mean_conflicts=("interference_links", "mean"),
        std_conflicts=("interference_links", lambda s: float(np.std(s.to_numpy(dtype=float)))),
        mean_degree=("avg_degree", "mean"),
        mean_delta=("delta", "mean"),
    ).reset_index()
    table["zero_rate_pct"] *= 100.0

    rows = [SummaryRow(
        model=str(row["model"]),
        i_target=int(row["i_target"]),
        q=int(row["q"]),
        mu_dbm=None if pd.isna(row["mu_dbm"]) else float(row["mu_dbm"]),
        solver=str(row["solver"]),
        z=int(row["z"]),
        zero_rate_pct=float(row["zero_rate_pct"]),
        mean_conflicts=float(row["mean_conflicts"]),
        std_conflicts=float(row["std_conflicts"]),
        mean_degree=float(row["mean_degree"]),
        mean_delta=None if pd.isna(row["mean_delta"]) else float(row["mean_delta"]),
    ) for row in table.to_dict(orient="records")]
    logger.info(f"Aggregated {len(records)} records into {len(rows)} summary rows")
    return rows


FIGURES_TEMPLATE = """\
# zero-interference rate and interference links per solver, read from summary.csv
# columns: 1 model, 2 i_target, 3 q, 4 mu_dbm, 5 solver, 6 z, 7 zero_rate_pct,
#          8 mean_conflicts, 9 std_conflicts, 10 mean_degree, 11 mean_delta
set datafile separator ','
set key autotitle columnhead
set grid
set terminal pngcairo size 900,600
solvers = "{solvers}"
pick(col) = (strcol(5) eq s) ? column(col) : 1/0

set output 'zero_rate_vs_i.png'
set xlabel 'stations I'
set ylabel 'zero-interference allocations (%)'
set yrange [0:100]
plot for [s in solvers] 'summary.csv' using 2:(pick(7)) with linespoints title s

set output 'conflicts_vs_i.png'
set ylabel 'average interference links'
set autoscale y
plot for [s in solvers] 'summary.csv' using 2:(pick(8)):(pick(9)) with yerrorlines title s

set output 'conflicts_vs_q.png'
set xlabel 'pools Q'
plot for [s in solvers] 'summary.csv' using 3:(pick(8)) with linespoints title s

set output 'conflicts_vs_mu.png'
set xlabel 'threshold mu (dBm)'
plot for [s in solvers] 'summary.csv' using 4:(pick(8)) with linespoints title s
"""


def emit_outputs(records: Sequence[ExperimentRecord],
                 summary: Sequence[SummaryRow],
                 out_dir: Path) -> List[Path]:
    """
    Writes records.csv, summary.csv and figures.gp into `out_dir`.

    CSV files are comma separated, UTF-8, LF terminated, with booleans as 0/1
    and empty cells for missing values.

    Raises:
        EmptyInputError: If there are no records; nothing is written.
        OSError: If the directory or a file cannot be written.
    """
    if not records:
        raise EmptyInputError("no records to write")
    out_dir = Path(out_dir)
    logger.info(f"Writing {len(records)} records to {out_dir}")

    frame = _records_frame(records)
    frame[_BOOL_COLUMNS] = frame[_BOOL_COLUMNS].astype(int)
    summary_frame = pd.DataFrame([row.model_dump() for row in summary], columns=SUMMARY_COLUMNS)
    solvers = " ".join(dict.fromkeys(row.solver for row in summary))
    paths = [out_dir / "records.csv", out_dir / "summary.csv", out_dir / "figures.gp"]
    try:
        os.makedirs(out_dir, exist_ok=True)
        frame.to_csv(paths[0], index=False, lineterminator="\n", encoding="utf-8", na_rep="")
        summary_frame.to_csv(paths[1], index=False, lineterminator="\n", encoding="utf-8", na_rep="")
        paths[2].write_text(FIGURES_TEMPLATE.format(solvers=solvers), encoding="utf-8", newline="\n")
    except OSError as e:
        logger.error(f"Cannot write outputs to {out_dir}: {e}")
        raise
    return paths
