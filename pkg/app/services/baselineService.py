import time
from typing import Iterable, List, Optional, Tuple
import numpy as np
from app.config import logger
from app.errors import ContradictionError
from app.models.base import GreedyOrder, Provenance
from app.models.factorGraph import Allocation, FactorGraph, VarId
from app.models.messages import SurveyState
from app.models.network import NetworkGraph
from app.schemas import SolveStats, SpParams


def min_conflict_pool(neighbors: Iterable[int], allocation: Allocation) -> int:
    """
    Pool used by the fewest already-assigned neighbors; ties go to the
    smallest pool index.
    """
    counts = [0] * allocation.q
    for j in neighbors:
        pool = allocation[j]
        if pool is not None:
            counts[pool] += 1
    return counts.index(min(counts))


def first_free_pool(neighbors: Iterable[int], allocation: Allocation) -> Optional[int]:
    used = {allocation[j] for j in neighbors if allocation[j] is not None}
    for pool in range(allocation.q):
        if pool not in used:
            return pool
    return None


def complete_min_conflict(g: NetworkGraph,
                          allocation: Allocation,
                          provenance: Provenance = Provenance.baseline) -> Allocation:
    """Gives every unassigned station, in index order, its min-conflict pool."""
    for station in allocation.unassigned():
        allocation.assign(station, min_conflict_pool(g.adjacency[station], allocation), provenance)
    return allocation


class GreedyService:
    def __init__(self,
                 rng: Optional[np.random.Generator] = None):
        self.rng = rng

    def greedy_allocate(self,
                        g: NetworkGraph,
                        q: int,
                        order: GreedyOrder,
                        initial: Optional[Allocation] = None,
                        provenance: Provenance = Provenance.baseline) -> Allocation:
        """
        Sequential greedy allocation.

        Stations are served one at a time and each takes the smallest pool not
        used by its already-served neighbors, or the min-conflict pool when all
        are taken. Stations already assigned in `initial` count as served and
        keep their pool.

        Args:
            g (NetworkGraph): The interference graph.
            q (int): Number of pools.
            order (GreedyOrder): static_degree (MNF) serves by degree
                descending, progressive_degree (PMNF) by degree among the
                stations not yet served, random by a permutation from the rng.
                Ties go to the smallest station index.
            initial (Optional[Allocation]): Partial allocation to complete in place.
            provenance (Provenance): Tag recorded for the stations served here.

        Returns:
            Allocation: A full allocation.

        Raises:
            ValueError: If q < 1, the random order has no rng, or `initial`
            does not match the graph.
        """
        if q < 1:
            raise ValueError("at least one pool is required")
        allocation = initial if initial is not None else Allocation(g.n, q)
        if allocation.n != g.n or allocation.q != q:
            raise ValueError("initial allocation does not match the instance")
        pending = allocation.unassigned()
        logger.info(f"Greedy ({order.value}) allocation of {len(pending)} stations, Q={q}")

        if order == GreedyOrder.static_degree:
            degrees = g.degrees()
            for station in sorted(pending, key=lambda i: (-degrees[i], i)):
                self._serve(g, allocation, station, provenance)
        elif order == GreedyOrder.progressive_degree:
            unserved = set(pending)
            while unserved:
                station = min(unserved, key=lambda i: (-len(g.adjacency[i] & unserved), i))
                self._serve(g, allocation, station, provenance)
                unserved.discard(station)
        else:
            if self.rng is None:
                raise ValueError("random order needs a generator")
            for k in self.rng.permutation(len(pending)).tolist():
                self._serve(g, allocation, pending[k], provenance)
        return allocation

    @staticmethod
    def _serve(g: NetworkGraph, allocation: Allocation, station: int, provenance: Provenance) -> None:
        pool = first_free_pool(g.adjacency[station], allocation)
        if pool is None:
            pool = min_conflict_pool(g.adjacency[station], allocation)
            logger.debug(f"Station {station} shares pool {pool} with a neighbor")
        allocation.assign(station, pool, provenance)

    def solve(self, g: NetworkGraph, q: int, order: GreedyOrder, solver: str) -> Tuple[Allocation, SolveStats]:
        started = time.perf_counter()
        allocation = self.greedy_allocate(g, q, order)
        stats = SolveStats(solver=solver, runtime_ms=(time.perf_counter() - started) * 1000.0)
        return allocation, stats


class BeliefPropagationService:
    def __init__(self,
                 params: SpParams,
                 rng: np.random.Generator):
        self.params = params
        self.rng = rng

    def run_messages(self, fg: FactorGraph) -> SurveyState:
        """
        Damped asynchronous BP on the residual factor graph.

        The message from clause a to variable i is the probability that every
        other variable of a violates it. Messages start uniform on [0, 1] and
        are updated in a fresh random order each sweep until no message moves
        by more than epsilon or t_sp_max sweeps have run.

        Args:
            fg (FactorGraph): The residual factor graph.

        Returns:
            SurveyState: The messages, reusing the survey store layout.
        """
        state = SurveyState(fg, self.rng.random(fg.live_edge_count()).tolist())
        count = len(state)
        if count == 0:
            state.converged = True
            return state

        damping = self.params.bp_damping
        eta = state.eta
        for sweep in range(1, self.params.t_sp_max + 1):
            largest_move = 0.0
            state.refresh()
            for k in self.rng.permutation(count).tolist():
                updated = self._message(state, k)
                updated = damping * eta[k] + (1.0 - damping) * updated
                move = abs(updated - eta[k])
                if move > largest_move:
                    largest_move = move
                state.update(k, updated)
            state.sweeps = sweep
            if largest_move <= self.params.epsilon:
                state.converged = True
                break
        return state

    @staticmethod
    def _message(state: SurveyState, k: int) -> float:
        value = 1.0
        for other in state.clause_edges[state.edges[k][0]]:
            if other == k:
                continue
            # violating the clause frees the same-sign occurrences
            same, opposite = state.cavity_products(other)
            total = same + opposite
            value *= same / total if total > 0.0 else 0.0
            if value == 0.0:
                break
        return min(1.0, max(0.0, value))

    @staticmethod
    def marginal_one(state: SurveyState, v: VarId) -> float:
        """P(x_v = 1) from the messages; 0.5 when both weights vanish."""
        plain, negated = state.sign_products(v)
        total = plain + negated
        return negated / total if total > 0.0 else 0.5

    def bp_allocate(self, g: NetworkGraph, q: int) -> Tuple[Allocation, SolveStats]:
        """
        BP-guided decimation.

        Each round runs the messages, fixes the most polarized variable to its
        more likely value and propagates one-option stations. The first
        contradiction stops the decimation; stations left unassigned then get
        their min-conflict pool in index order.

        Args:
            g (NetworkGraph): The interference graph.
            q (int): Number of pools.

        Returns:
            Tuple[Allocation, SolveStats]: A full allocation; `stopped` is set
            when decimation hit a contradiction.
        """
        if q < 1:
            raise ValueError("at least one pool is required")
        logger.info(f"BP allocation for n={g.n}, |E|={len(g.edges)}, Q={q}")
        started = time.perf_counter()

        fg = FactorGraph.build_csp(g, q)
        allocation = Allocation(g.n, q)
        stats = SolveStats(solver="bp")
        try:
            self._cascade(fg, allocation)
            while allocation.unassigned() and fg.vars:
                state = self.run_messages(fg)
                stats.sp_runs += 1
                stats.sp_sweeps += state.sweeps
                v, p_one = self._most_polarized(fg, state)
                value = 1 if p_one >= 0.5 else 0
                logger.debug(f"BP fixes {v} = {value} (P1={p_one:.4f})")
                if value == 1:
                    allocation.assign(v.station, v.pool, Provenance.baseline)
                stats.decimation_steps += 1
                fg.fix_variable(v, value)
                self._cascade(fg, allocation)
        except ContradictionError as e:
            stats.stopped = True
            stats.contradictions += 1
            logger.warning(f"BP decimation stopped after {stats.decimation_steps} steps: {e}")

        complete_min_conflict(g, allocation)
        stats.runtime_ms = (time.perf_counter() - started) * 1000.0
        return allocation, stats

    def _most_polarized(self, fg: FactorGraph, state: SurveyState) -> Tuple[VarId, float]:
        best, best_p, best_gap = None, 0.5, -1.0
        for v in sorted(fg.vars):
            p_one = self.marginal_one(state, v)
            gap = abs(2.0 * p_one - 1.0)
            if gap > best_gap:
                best, best_p, best_gap = v, p_one, gap
        return best, best_p

    @staticmethod
    def _cascade(fg: FactorGraph, allocation: Allocation) -> None:
        ones = fg.one_option_stations()
        while ones:
            for station in sorted(ones):
                pools = fg.available_pools(station)
                if len(pools) == 1 and not allocation.is_assigned(station):
                    allocation.assign(station, pools[0], Provenance.baseline)
                    fg.fix_variable(VarId(station, pools[0]), 1)
            ones = fg.one_option_stations()
