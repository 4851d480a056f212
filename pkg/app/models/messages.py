from typing import Dict, List, NamedTuple, Sequence, Tuple, Union
from app.models.factorGraph import FactorGraph, VarId


class PiTriplet(NamedTuple):
    pi_u: float
    pi_s: float
    pi_star: float


class SurveyState:
    """
    One message per live (clause -> variable) edge of a factor graph, stored
    by edge index. The index is a snapshot: the factor graph must not be
    decimated while the state is in use.

    For every variable and sign the state keeps the product of the nonzero
    (1 - eta) factors and the number of zero factors, so a cavity product is
    one division instead of a pass over the variable's clauses. Messages must
    be written through `update` or `set` to keep those products in step.
    """

    def __init__(self, fg: FactorGraph, eta: Union[float, Sequence[float]] = 0.0):
        self.edges: List[Tuple[int, VarId]] = list(fg.live_edges())
        self.index: Dict[Tuple[int, VarId], int] = {e: k for k, e in enumerate(self.edges)}
        self.edge_sign: List[bool] = [fg.clauses[cid].signs[v] for cid, v in self.edges]
        self.clause_edges: Dict[int, List[int]] = {}
        self.var_edges: Dict[VarId, List[int]] = {}
        for k, (cid, v) in enumerate(self.edges):
            self.clause_edges.setdefault(cid, []).append(k)
            self.var_edges.setdefault(v, []).append(k)
        slots = {v: s for s, v in enumerate(self.var_edges)}
        self.edge_slot: List[int] = [slots[v] for _, v in self.edges]
        if isinstance(eta, (int, float)):
            self.eta: List[float] = [float(eta)] * len(self.edges)
        else:
            if len(eta) != len(self.edges):
                raise ValueError("one initial survey per live edge is required")
            self.eta = [float(x) for x in eta]
        # indexed [sign][slot]; sign 1 is plain, 0 negated
        self._prod: List[List[float]] = [[], []]
        self._zeros: List[List[int]] = [[], []]
        self.refresh()
        self.sweeps = 0
        self.converged = False

    def __len__(self) -> int:
        return len(self.edges)

    def refresh(self) -> None:
        """Rebuilds the per-variable products from the current messages."""
        count = len(self.var_edges)
        prod = [[1.0] * count, [1.0] * count]
        zeros = [[0] * count, [0] * count]
        for k, value in enumerate(self.eta):
            sign, slot = int(self.edge_sign[k]), self.edge_slot[k]
            factor = 1.0 - value
            if factor == 0.0:
                zeros[sign][slot] += 1
            else:
                prod[sign][slot] *= factor
        self._prod, self._zeros = prod, zeros

    def update(self, k: int, value: float) -> None:
        sign, slot = int(self.edge_sign[k]), self.edge_slot[k]
        old, new = 1.0 - self.eta[k], 1.0 - value
        if old == 0.0:
            self._zeros[sign][slot] -= 1
        else:
            self._prod[sign][slot] /= old
        if new == 0.0:
            self._zeros[sign][slot] += 1
        else:
            self._prod[sign][slot] *= new
        self.eta[k] = value

    def set(self, cid: int, v: VarId, value: float) -> None:
        self.update(self.index[(cid, v)], value)

    def max_eta(self) -> float:
        return max(self.eta, default=0.0)

    def _product(self, sign: int, slot: int) -> float:
        if self._zeros[sign][slot]:
            return 0.0
        return min(1.0, self._prod[sign][slot])

    def sign_products(self, v: VarId) -> Tuple[float, float]:
        """Products of (1 - eta) over the plain and the negated clauses of `v`."""
        if v not in self.var_edges:
            return 1.0, 1.0
        slot = self.edge_slot[self.var_edges[v][0]]
        return self._product(1, slot), self._product(0, slot)

    def cavity_products(self, k: int) -> Tuple[float, float]:
        """
        Products of (1 - eta) over the clauses of edge k's variable other than
        edge k's clause, split into same-sign and opposite-sign occurrences.
        """
        sign, slot = int(self.edge_sign[k]), self.edge_slot[k]
        own = 1.0 - self.eta[k]
        if own == 0.0:
            same = 0.0 if self._zeros[sign][slot] > 1 else min(1.0, self._prod[sign][slot])
        elif self._zeros[sign][slot]:
            same = 0.0
        else:
            same = min(1.0, self._prod[sign][slot] / own)
        return same, self._product(1 - sign, slot)

    def pi(self, k: int) -> PiTriplet:
        same, opposite = self.cavity_products(k)
        triplet = PiTriplet((1.0 - opposite) * same, (1.0 - same) * opposite, same * opposite)
        assert all(0.0 <= x <= 1.0 for x in triplet)
        return triplet

    def eta_of(self, k: int) -> float:
        value = 1.0
        for other in self.clause_edges[self.edges[k][0]]:
            if other == k:
                continue
            same, opposite = self.cavity_products(other)
            # pi_u + pi_s + pi_star
            total = same + opposite - same * opposite
            # 0/0: the variable exerts no constraint
            value *= (1.0 - opposite) * same / total if total > 0.0 else 0.0
            if value == 0.0:
                break
        value = min(1.0, max(0.0, value))
        assert 0.0 <= value <= 1.0
        return value
