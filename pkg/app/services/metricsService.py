import itertools
import math
from typing import Iterable, List, Optional, Union
import networkx as nx
import numpy as np
from app.config import logger, settings
from app.errors import EmptyInputError, InstanceTooLargeError
from app.models.base import DeltaMode
from app.models.factorGraph import Allocation
from app.models.network import NetworkGraph
from app.schemas import ExperimentRecord

UNREACHABLE = -1
_QUADRUPLE_CHUNK = 200_000


def interference_links(g: NetworkGraph, a: Allocation) -> int:
    """
    Number of edges whose endpoints share a pool.

    Raises:
        PartialAllocationError: If some station has no pool.
    """
    pools = a.pools()
    return sum(1 for i, j in g.edges if pools[i] == pools[j])


class DistanceMatrix:
    """All-pairs hop counts; unreachable pairs hold UNREACHABLE."""

    def __init__(self, hops: np.ndarray, components: List[List[int]]):
        self.hops = hops
        self.components = components

    @property
    def n(self) -> int:
        return self.hops.shape[0]

    def get(self, i: int, j: int) -> int:
        return int(self.hops[i, j])

    def reachable(self, i: int, j: int) -> bool:
        return self.hops[i, j] != UNREACHABLE

    def diameter(self) -> int:
        """Largest finite hop distance; 0 for edgeless graphs."""
        return int(self.hops.max(initial=0))

    def component_count(self) -> int:
        return len(self.components)


def all_pairs_hops(g: NetworkGraph) -> DistanceMatrix:
    """Breadth-first hop distances between every pair of stations."""
    graph = g.to_networkx()
    hops = np.full((g.n, g.n), UNREACHABLE, dtype=np.int64)
    for source, lengths in nx.all_pairs_shortest_path_length(graph):
        for target, length in lengths.items():
            hops[source, target] = length
    components = sorted((sorted(c) for c in nx.connected_components(graph)), key=lambda c: c[0])
    return DistanceMatrix(hops, components)


def diameter(g: NetworkGraph) -> int:
    return all_pairs_hops(g).diameter()


def component_count(g: NetworkGraph) -> int:
    return nx.number_connected_components(g.to_networkx())


def _four_point_delta(d: np.ndarray, quads: np.ndarray) -> float:
    a, b, c, e = quads[:, 0], quads[:, 1], quads[:, 2], quads[:, 3]
    sums = np.stack([d[a, b] + d[c, e], d[a, c] + d[b, e], d[a, e] + d[b, c]], axis=1)
    sums.sort(axis=1)
    return float((sums[:, 2] - sums[:, 1]).max()) / 2.0


def delta_hyperbolicity(g: NetworkGraph,
                        mode: DeltaMode = DeltaMode.exact,
                        k: int = settings.delta_samples,
                        rng: Optional[np.random.Generator] = None) -> float:
    """
    Gromov four-point delta of the hop metric.

    For each quadruple the three pairwise sums are sorted and half the gap
    between the two largest is taken; delta is the maximum over quadruples
    inside one connected component. Components with fewer than four stations
    contribute 0.

    Args:
        g (NetworkGraph): The graph.
        mode (DeltaMode): exact enumerates every quadruple, sampled draws `k`
            quadruples uniformly from the per-component quadruple population.
        k (int): Sample count for sampled mode.
        rng (Optional[np.random.Generator]): Required for sampled mode.

    Returns:
        float: delta, a multiple of 0.5.

    Raises:
        InstanceTooLargeError: If exact mode is asked for more than
            settings.exact_delta_max_n stations.
        ValueError: If sampled mode has no rng or k < 1.
    """
    if mode == DeltaMode.exact and g.n > settings.exact_delta_max_n:
        raise InstanceTooLargeError(
            f"exact delta is limited to {settings.exact_delta_max_n} stations, got {g.n}")
    distances = all_pairs_hops(g)
    eligible = [np.asarray(c, dtype=np.int64) for c in distances.components if len(c) >= 4]
    logger.info(f"Computing {mode.value} delta over {len(eligible)} components")
    if not eligible:
        return 0.0

    if mode == DeltaMode.exact:
        delta = 0.0
        for nodes in eligible:
            sub = distances.hops[np.ix_(nodes, nodes)]
            combos = itertools.combinations(range(nodes.size), 4)
            while True:
                chunk = list(itertools.islice(combos, _QUADRUPLE_CHUNK))
                if not chunk:
                    break
                delta = max(delta, _four_point_delta(sub, np.asarray(chunk, dtype=np.int64)))
        return delta

    if rng is None:
        raise ValueError("sampled delta needs a generator")
    if k < 1:
        raise ValueError("sample count must be positive")
    weights = np.array([math.comb(nodes.size, 4) for nodes in eligible], dtype=float)
    per_component = rng.multinomial(k, weights / weights.sum())
    delta = 0.0
    for nodes, count in zip(eligible, per_component.tolist()):
        if count == 0:
            continue
        sub = distances.hops[np.ix_(nodes, nodes)]
        quads = _distinct_quadruples(nodes.size, count, rng)
        delta = max(delta, _four_point_delta(sub, quads))
    logger.debug(f"Sampled delta {delta} from {k} quadruples")
    return delta


def _distinct_quadruples(size: int, count: int, rng: np.random.Generator) -> np.ndarray:
    kept: List[np.ndarray] = []
    missing = count
    while missing > 0:
        draws = rng.integers(0, size, size=(missing, 4))
        ordered = np.sort(draws, axis=1)
        distinct = np.all(ordered[:, 1:] != ordered[:, :-1], axis=1)
        kept.append(draws[distinct])
        missing -= int(distinct.sum())
    return np.concatenate(kept)[:count]


def zero_interference_rate(records: Iterable[Union[ExperimentRecord, int]]) -> float:
    """
    Percentage of runs with no interference link.

    Args:
        records: Experiment records or raw interference-link counts.

    Raises:
        EmptyInputError: If there are no records.
    """
    links = [r.interference_links if isinstance(r, ExperimentRecord) else int(r) for r in records]
    if not links:
        raise EmptyInputError("no records to rate")
    return 100.0 * sum(1 for x in links if x == 0) / len(links)
