from typing import Dict, Iterator, List, NamedTuple, Optional, Set, Tuple
import numpy as np
from app.config import logger, settings
from app.errors import ContradictionError, InstanceTooLargeError, ParseError, PartialAllocationError
from app.models.base import Provenance
from app.models.network import Edge, NetworkGraph


class VarId(NamedTuple):
    """x_{station,pool}; pools are 0-based here and 1-based in all I/O."""
    station: int
    pool: int


class Clause:
    """
    A disjunction of signed literals. `signs` maps each variable to True for a
    plain occurrence and False for a negated one.
    """
    __slots__ = ("cid", "kind", "station", "edge", "pool", "signs")

    def __init__(self,
                 cid: int,
                 kind: str,
                 signs: Dict[VarId, bool],
                 station: Optional[int] = None,
                 edge: Optional[Edge] = None,
                 pool: Optional[int] = None):
        self.cid = cid
        self.kind = kind
        self.signs = signs
        self.station = station
        self.edge = edge
        self.pool = pool

    @property
    def is_alpha(self) -> bool:
        return self.kind == "alpha"

    @property
    def literals(self) -> List[Tuple[VarId, bool]]:
        return list(self.signs.items())

    def satisfied_by(self, values: Dict[VarId, int]) -> bool:
        return any(values.get(v, 0) == (1 if sign else 0) for v, sign in self.signs.items())

    def __repr__(self) -> str:
        if self.is_alpha:
            return f"Alpha({self.station}, {len(self.signs)} literals)"
        return f"Beta({self.edge}, pool={self.pool}, {len(self.signs)} literals)"


class Allocation:
    """Station -> pool map, possibly partial, with the provenance of every entry."""

    def __init__(self, n: int, q: int):
        self.n = n
        self.q = q
        self.assignment: List[Optional[int]] = [None] * n
        self.provenance: List[Optional[Provenance]] = [None] * n

    def __getitem__(self, station: int) -> Optional[int]:
        return self.assignment[station]

    def __repr__(self) -> str:
        return f"Allocation({self.assignment})"

    def assign(self, station: int, pool: int, provenance: Provenance) -> None:
        if not 0 <= pool < self.q:
            raise ValueError(f"pool {pool} outside 0..{self.q - 1}")
        self.assignment[station] = pool
        self.provenance[station] = provenance

    def is_assigned(self, station: int) -> bool:
        return self.assignment[station] is not None

    def is_full(self) -> bool:
        return all(p is not None for p in self.assignment)

    def unassigned(self) -> List[int]:
        return [i for i, p in enumerate(self.assignment) if p is None]

    def pools(self) -> List[int]:
        """
        Raises:
            PartialAllocationError: If a station has no pool.
        """
        if not self.is_full():
            raise PartialAllocationError(
                f"stations {self.unassigned()} have no pool")
        return list(self.assignment)

    def to_csv(self) -> str:
        rows = ["station,pool"]
        rows.extend(f"{i},{p + 1}" for i, p in enumerate(self.pools()))
        return "\n".join(rows) + "\n"

    @classmethod
    def from_csv(cls, text: str, n: int, q: int,
                 provenance: Provenance = Provenance.baseline) -> "Allocation":
        allocation = cls(n, q)
        for lineno, raw in enumerate(text.splitlines(), start=1):
            if lineno == 1 or not raw.strip():
                continue
            try:
                station, pool = (int(t) for t in raw.split(","))
                allocation.assign(station, pool - 1, provenance)
            except (ValueError, IndexError) as e:
                raise ParseError(f"bad allocation row '{raw}': {e}", line=lineno)
        return allocation


class FactorGraph:
    """
    CSP instance of a network: variables x_{i,q}, one Alpha clause per station
    and one two-literal Beta clause per (edge, pool). Decimation mutates the
    live part; build-time counts and clauses are kept for scoring.
    """

    def __init__(self, n: int, q: int, edge_count: int, neighbors: List[Set[int]]):
        self.n = n
        self.q = q
        self.edge_count = edge_count
        self.neighbors = neighbors
        self.vars: Set[VarId] = set()
        self.clauses: Dict[int, Clause] = {}
        self.var_adj: Dict[VarId, Set[int]] = {}
        self.fixed: Dict[VarId, int] = {}
        self.alpha_of: Dict[int, int] = {}
        self.original_clauses: List[Clause] = []
        self.falsified: List[Clause] = []
        self.built_vars = 0
        self.built_clauses = 0

    @classmethod
    def build_csp(cls, g: NetworkGraph, q_pools: int) -> "FactorGraph":
        """
        Encodes a network and a pool count as a CSP factor graph.

        Args:
            g (NetworkGraph): The interference graph.
            q_pools (int): Number of resource pools Q.

        Returns:
            FactorGraph: Q*n variables and n + Q*|E| clauses.

        Raises:
            ValueError: If q_pools < 1.
        """
        if q_pools < 1:
            raise ValueError("at least one pool is required")
        logger.info(f"Building CSP for n={g.n}, |E|={len(g.edges)}, Q={q_pools}")

        fg = cls(g.n, q_pools, len(g.edges), [set(a) for a in g.adjacency])
        for i in range(g.n):
            for q in range(q_pools):
                v = VarId(i, q)
                fg.vars.add(v)
                fg.var_adj[v] = set()

        cid = 0
        for i in range(g.n):
            signs = {VarId(i, q): True for q in range(q_pools)}
            fg._add_clause(Clause(cid, "alpha", signs, station=i))
            fg.alpha_of[i] = cid
            cid += 1
        for (i, j) in g.edges:
            for q in range(q_pools):
                signs = {VarId(i, q): False, VarId(j, q): False}
                fg._add_clause(Clause(cid, "beta", signs, edge=(i, j), pool=q))
                cid += 1

        fg.original_clauses = [
            Clause(c.cid, c.kind, dict(c.signs), c.station, c.edge, c.pool)
            for c in fg.clauses.values()]
        fg.built_vars = len(fg.vars)
        fg.built_clauses = len(fg.clauses)
        logger.debug(f"Factor graph built: {fg.built_vars} variables, {fg.built_clauses} clauses")
        return fg

    def _add_clause(self, clause: Clause) -> None:
        self.clauses[clause.cid] = clause
        for v in clause.signs:
            self.var_adj[v].add(clause.cid)

    def theta(self) -> float:
        """Clause-to-variable ratio from build-time counts."""
        if self.built_vars == 0:
            raise ValueError("factor graph has no variables")
        return self.built_clauses / self.built_vars

    def live_edges(self) -> Iterator[Tuple[int, VarId]]:
        for cid, clause in self.clauses.items():
            for v in clause.signs:
                yield cid, v

    def live_edge_count(self) -> int:
        return sum(len(c.signs) for c in self.clauses.values())

    def available_pools(self, station: int) -> List[int]:
        cid = self.alpha_of.get(station)
        if cid is None:
            return []
        return sorted(v.pool for v in self.clauses[cid].signs)

    def one_option_stations(self) -> Set[int]:
        """Stations whose live Alpha clause has exactly one literal left."""
        return {station for station, cid in self.alpha_of.items()
                if len(self.clauses[cid].signs) == 1}

    # scoring

    def _encode(self, a: Allocation) -> Dict[VarId, int]:
        return {VarId(i, p): 1 for i, p in enumerate(a.pools())}

    def cost(self, a: Allocation) -> int:
        """
        Number of build-time clauses left unsatisfied by a full allocation.

        Raises:
            PartialAllocationError: If some station has no pool.
        """
        values = self._encode(a)
        return sum(1 for c in self.original_clauses if not c.satisfied_by(values))

    def residual_cost(self, a: Allocation) -> int:
        values = self._encode(a)
        return sum(1 for c in self.clauses.values() if not c.satisfied_by(values))

    def is_zero_interference(self, a: Allocation) -> bool:
        return self.cost(a) == 0

    # decimation

    def fix_variable(self, v: VarId, value: int) -> List[VarId]:
        """
        Fixes a live variable and simplifies the factor graph.

        Satisfied clauses are removed and falsified literals deleted. Fixing
        x_{i,q}=1 also fixes x_{i,r}=0 for every other pool r and x_{j,q}=0
        for every neighbor j. The whole propagation completes before any
        contradiction is reported, so the factor graph stays consistent.

        Args:
            v (VarId): A live variable.
            value (int): 0 or 1.

        Returns:
            List[VarId]: Every variable fixed by this call, `v` first.

        Raises:
            ValueError: If `v` is not live or `value` is not a bit.
            ContradictionError: If a clause lost its last literal.
        """
        if v not in self.vars:
            raise ValueError(f"{v} is not a live variable")
        if value not in (0, 1):
            raise ValueError("value must be 0 or 1")
        logger.debug(f"Fixing {v} = {value}")

        emptied: List[Clause] = []
        fixed_now: List[VarId] = []
        self._set(v, value, emptied, fixed_now)
        if value == 1:
            station, pool = v
            for r in range(self.q):
                other = VarId(station, r)
                if r != pool and other in self.vars:
                    self._set(other, 0, emptied, fixed_now)
            for j in sorted(self.neighbors[station]):
                other = VarId(j, pool)
                if other in self.vars:
                    self._set(other, 0, emptied, fixed_now)

        if emptied:
            stations = [c.station for c in emptied if c.is_alpha]
            logger.warning(f"Fixing {v} = {value} emptied {len(emptied)} clauses "
                           f"(stations {stations})")
            raise ContradictionError(stations, emptied)
        return fixed_now

    def _set(self, v: VarId, value: int, emptied: List[Clause], fixed_now: List[VarId]) -> None:
        self.fixed[v] = value
        self.vars.discard(v)
        fixed_now.append(v)
        for cid in sorted(self.var_adj.pop(v)):
            clause = self.clauses[cid]
            if clause.signs[v] == (value == 1):
                self._remove_clause(clause)
            else:
                del clause.signs[v]
                if not clause.signs:
                    self._remove_clause(clause)
                    self.falsified.append(clause)
                    emptied.append(clause)

    def _remove_clause(self, clause: Clause) -> None:
        for u in clause.signs:
            if u in self.var_adj:
                self.var_adj[u].discard(clause.cid)
        del self.clauses[clause.cid]
        if clause.is_alpha:
            self.alpha_of.pop(clause.station, None)

    def retire_station(self, station: int) -> List[VarId]:
        """
        Fixes every live variable of a station to 0 without propagation.
        Used when a station is assigned outside the decimation (min-conflict);
        its Alpha clause is dropped as handled.
        """
        cid = self.alpha_of.get(station)
        if cid is not None:
            self._remove_clause(self.clauses[cid])
        emptied: List[Clause] = []
        fixed_now: List[VarId] = []
        for r in range(self.q):
            v = VarId(station, r)
            if v in self.vars:
                self._set(v, 0, emptied, fixed_now)
        return fixed_now


def brute_force_min_cost(g: NetworkGraph, q: int,
                         limit: int = settings.brute_force_limit) -> Tuple[Allocation, int]:
    """
    Exact minimum of the cost over all one-pool-per-station assignments.

    Assignments are scanned in lexicographic order (station 0 most significant),
    so the first minimizer wins ties.

    Args:
        g (NetworkGraph): The interference graph.
        q (int): Number of pools.
        limit (int): Largest admissible q**n.

    Returns:
        Tuple[Allocation, int]: The minimizer and its cost.

    Raises:
        InstanceTooLargeError: If q**n exceeds `limit`.
    """
    total = q ** g.n
    if total > limit:
        raise InstanceTooLargeError(f"{q}^{g.n} assignments exceed the limit of {limit}")
    logger.info(f"Brute force over {total} assignments")

    weights = q ** np.arange(g.n - 1, -1, -1, dtype=np.int64)
    rows = np.array([i for i, _ in g.edges], dtype=np.int64)
    cols = np.array([j for _, j in g.edges], dtype=np.int64)
    best_cost, best_index = None, 0
    chunk = 1 << 16
    for start in range(0, total, chunk):
        index = np.arange(start, min(start + chunk, total), dtype=np.int64)
        digits = (index[:, None] // weights[None, :]) % q
        conflicts = (digits[:, rows] == digits[:, cols]).sum(axis=1) if rows.size \
            else np.zeros(index.size, dtype=np.int64)
        local = int(np.argmin(conflicts))
        if best_cost is None or conflicts[local] < best_cost:
            best_cost, best_index = int(conflicts[local]), int(index[local])

    allocation = Allocation(g.n, q)
    for station in range(g.n):
        allocation.assign(station, int(best_index // int(weights[station]) % q), Provenance.baseline)
    logger.debug(f"Brute force minimum cost {best_cost}")
    return allocation, best_cost
