import time
from typing import Dict, List, NamedTuple, Optional, Tuple
import numpy as np
from app.config import logger
from app.errors import ContradictionError, EmptyInputError
from app.models.base import GreedyOrder, Provenance
from app.models.factorGraph import Allocation, Clause, FactorGraph, VarId
from app.models.messages import PiTriplet, SurveyState
from app.models.network import NetworkGraph
from app.schemas import SolveStats, SpParams
from app.services import baselineService


class Bias(NamedTuple):
    w_plus: float
    w_minus: float
    pi_plus: float
    pi_minus: float
    pi_zero: float


BiasTable = Dict[VarId, Bias]


class SurveyService:
    def __init__(self,
                 params: SpParams,
                 rng: np.random.Generator):
        self.params = params
        self.rng = rng

    @staticmethod
    def pi_triplet(fg: FactorGraph, state: SurveyState, v: VarId, c: Clause) -> PiTriplet:
        """
        Cavity message from `v` to clause `c`.

        The recipient clause is excluded from both products; the other clauses of
        `v` are split by whether `v` occurs in them with the sign it has in `c`.

        Args:
            fg (FactorGraph): The factor graph the state was built from.
            state (SurveyState): Current surveys.
            v (VarId): A variable of `c`.
            c (Clause): The recipient clause.

        Returns:
            PiTriplet: (pi_u, pi_s, pi_star).
        """
        return state.pi(state.index[(c.cid, v)])

    @staticmethod
    def eta_update(fg: FactorGraph, state: SurveyState, c: Clause, v: VarId) -> float:
        """
        Survey from clause `c` to `v`: the product over the other variables of
        `c` of pi_u / (pi_u + pi_s + pi_star), clamped to [0, 1].
        """
        return state.eta_of(state.index[(c.cid, v)])

    def run_surveys(self, fg: FactorGraph) -> SurveyState:
        """
        Iterates the surveys asynchronously until they settle.

        Surveys start uniform on [0, 1]; each sweep updates every live edge once
        in a fresh random order. The run converges when no survey moved by more
        than epsilon during a sweep, and gives up after t_sp_max sweeps.

        Args:
            fg (FactorGraph): The (possibly decimated) factor graph.

        Returns:
            SurveyState: Final surveys; `converged` tells whether they settled.
        """
        state = SurveyState(fg, self.rng.random(fg.live_edge_count()).tolist())
        count = len(state)
        logger.debug(f"Running surveys over {count} edges")
        if count == 0:
            state.converged = True
            return state

        eta = state.eta
        for sweep in range(1, self.params.t_sp_max + 1):
            state.refresh()
            largest_move = 0.0
            for k in self.rng.permutation(count).tolist():
                updated = state.eta_of(k)
                move = abs(updated - eta[k])
                if move > largest_move:
                    largest_move = move
                state.update(k, updated)
            state.sweeps = sweep
            if largest_move <= self.params.epsilon:
                state.converged = True
                break

        if not state.converged:
            logger.debug(f"Surveys did not converge within {self.params.t_sp_max} sweeps")
        return state

    @staticmethod
    def biases(fg: FactorGraph, state: SurveyState) -> BiasTable:
        """
        Polarization of every live variable.

        pi_plus collects warnings from clauses where the variable is plain
        (Alpha), pi_minus from clauses where it is negated (Beta), and pi_zero is
        the product over all adjacent clauses. W+ and W- normalize by the sum;
        an all-zero sum gives W+ = W- = 0.
        """
        table: BiasTable = {}
        for v in sorted(fg.vars):
            plain, negated = state.sign_products(v)
            pi_plus = (1.0 - plain) * negated
            pi_minus = (1.0 - negated) * plain
            pi_zero = plain * negated
            total = pi_plus + pi_minus + pi_zero
            if total > 0.0:
                w_plus, w_minus = pi_plus / total, pi_minus / total
            else:
                w_plus = w_minus = 0.0
            assert w_plus + w_minus <= 1.0 + 1e-9
            table[v] = Bias(w_plus, w_minus, pi_plus, pi_minus, pi_zero)
        return table

    @staticmethod
    def max_bias_var(table: BiasTable) -> VarId:
        """
        Variable with the largest |W+ - W-|; ties go to the smallest (station, pool).

        Raises:
            EmptyInputError: If the table is empty.
        """
        if not table:
            raise EmptyInputError("bias table is empty")
        best: Optional[VarId] = None
        best_gap = -1.0
        for v in sorted(table):
            gap = abs(table[v].w_plus - table[v].w_minus)
            if gap > best_gap:
                best, best_gap = v, gap
        return best

    # decimation

    def sp_allocate(self, g: NetworkGraph, q: int) -> Tuple[Allocation, SolveStats]:
        """
        Allocates pools by survey-guided decimation.

        Each round runs the surveys on the residual factor graph:
        - converged with some survey above eta_zero_tol: the most polarized
          variable is set to 1 (with follow_bias_sign, to 0 when W- > W+),
          then forced neighbors and one-option stations are propagated;
        - converged with all surveys about zero: the remaining stations are
          completed by the maximum-neighbors-first greedy;
        - t_prime_max consecutive non-converged runs: a random station of
          maximum residual degree gets a random still-feasible pool.
        A station left with no feasible pool is given the pool with the fewest
        conflicts among its assigned neighbors.

        Args:
            g (NetworkGraph): The interference graph.
            q (int): Number of pools.

        Returns:
            Tuple[Allocation, SolveStats]: A full allocation and run statistics.
        """
        if q < 1:
            raise ValueError("at least one pool is required")
        logger.info(f"SP allocation for n={g.n}, |E|={len(g.edges)}, Q={q}")
        started = time.perf_counter()

        fg = FactorGraph.build_csp(g, q)
        allocation = Allocation(g.n, q)
        stats = SolveStats(solver="sp")
        max_steps = self.params.max_steps(g.n, q)
        failures = 0

        self._cascade(fg, allocation, stats)
        while allocation.unassigned():
            if stats.decimation_steps >= max_steps:
                logger.warning(f"Reached {max_steps} decimation steps, completing greedily")
                self._complete_greedily(g, allocation, stats)
                break

            state = self.run_surveys(fg)
            stats.sp_runs += 1
            stats.sp_sweeps += state.sweeps

            if state.converged:
                failures = 0
                if state.max_eta() <= self.params.zero_tol:
                    logger.debug("Surveys reached the trivial fixed point")
                    self._complete_greedily(g, allocation, stats)
                    break
                table = self.biases(fg, state)
                v = self.max_bias_var(table)
                bias = table[v]
                value = 0 if self.params.follow_bias_sign and bias.w_minus > bias.w_plus else 1
                logger.debug(f"Decimating {v} = {value} (W+={bias.w_plus:.4f}, W-={bias.w_minus:.4f})")
                self._apply(fg, allocation, v, value, Provenance.sp_bias, stats)
                self._cascade(fg, allocation, stats)
                stats.decimation_steps += 1
                continue

            failures += 1
            if failures >= self.params.t_prime_max:
                failures = 0
                stats.restarts += 1
                v = self._restart_choice(fg, allocation)
                logger.warning(f"Surveys failed {self.params.t_prime_max} times, assigning {v}")
                self._apply(fg, allocation, v, 1, Provenance.restart, stats)
                self._cascade(fg, allocation, stats)
                stats.decimation_steps += 1

        stats.runtime_ms = (time.perf_counter() - started) * 1000.0
        logger.debug(f"SP allocation finished: {stats}")
        return allocation, stats

    def _restart_choice(self, fg: FactorGraph, allocation: Allocation) -> VarId:
        pending = allocation.unassigned()
        degree = {i: sum(1 for j in fg.neighbors[i] if not allocation.is_assigned(j))
                  for i in pending}
        top = max(degree.values())
        candidates = [i for i in pending if degree[i] == top]
        station = candidates[int(self.rng.integers(len(candidates)))]
        pools = fg.available_pools(station)
        return VarId(station, pools[int(self.rng.integers(len(pools)))])

    def _apply(self, fg: FactorGraph, allocation: Allocation, v: VarId, value: int,
               provenance: Provenance, stats: SolveStats) -> None:
        if value == 1:
            allocation.assign(v.station, v.pool, provenance)
        try:
            fg.fix_variable(v, value)
        except ContradictionError as e:
            self._resolve(fg, allocation, e.stations, stats)

    def _cascade(self, fg: FactorGraph, allocation: Allocation, stats: SolveStats) -> None:
        ones = fg.one_option_stations()
        while ones:
            for station in sorted(ones):
                pools = fg.available_pools(station)
                if len(pools) == 1 and not allocation.is_assigned(station):
                    self._apply(fg, allocation, VarId(station, pools[0]), 1, Provenance.forced, stats)
            ones = fg.one_option_stations()

    def _resolve(self, fg: FactorGraph, allocation: Allocation,
                 stations: List[int], stats: SolveStats) -> None:
        pending = list(stations)
        while pending:
            station = pending.pop(0)
            if allocation.is_assigned(station):
                continue
            stats.contradictions += 1
            pool = baselineService.min_conflict_pool(fg.neighbors[station], allocation)
            allocation.assign(station, pool, Provenance.forced)
            logger.warning(f"Station {station} has no feasible pool, sharing pool {pool}")
            fg.retire_station(station)
            for j in sorted(fg.neighbors[station]):
                other = VarId(j, pool)
                if other in fg.vars:
                    try:
                        fg.fix_variable(other, 0)
                    except ContradictionError as e:
                        pending.extend(e.stations)

    def _complete_greedily(self, g: NetworkGraph, allocation: Allocation, stats: SolveStats) -> None:
        stats.fallback_used = True
        baselineService.GreedyService(self.rng).greedy_allocate(
            g, allocation.q, GreedyOrder.static_degree,
            initial=allocation, provenance=Provenance.greedy_fallback)
