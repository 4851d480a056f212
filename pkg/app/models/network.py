import hashlib
import math
from typing import Dict, Iterable, List, Optional, Sequence, Tuple
import networkx as nx
import numpy as np
from app.config import logger
from app.errors import ParseError
from app.schemas import ChannelParams

Edge = Tuple[int, int]
Position = Tuple[float, float]

HEADER_PREFIX = "spinalloc-graph v1"
# coincident stations are pulled 1 m apart
MIN_DISTANCE_KM = 0.001
# rounding slack of the log-domain threshold test
THRESHOLD_TOL_DB = 1e-9


def edge_key(i: int, j: int) -> Edge:
    return (i, j) if i < j else (j, i)


def received_power_dbm(gain: float, p_tx: float) -> float:
    """
    Received interference power of a test signal, noise excluded.

    Args:
        gain (float): Linear channel power gain |h|^2.
        p_tx (float): Transmit power in mW.

    Returns:
        float: 10*log10(gain * p_tx) in dBm.

    Raises:
        ValueError: If gain or p_tx is not strictly positive.
    """
    if gain <= 0 or p_tx <= 0:
        raise ValueError("gain and p_tx must be positive")
    # summed in the log domain so decade-exact inputs land on exact thresholds
    return 10.0 * math.log10(gain) + 10.0 * math.log10(p_tx)


def is_neighbor(gain: float, params: ChannelParams) -> bool:
    return received_power_dbm(gain, params.p_tx) >= params.mu_dbm - THRESHOLD_TOL_DB


class NetworkGraph:
    """
    Interference topology: stations 0..n-1, undirected neighbor edges, one
    symmetric channel gain per edge and optional positions in km.
    """

    def __init__(self,
                 n: int,
                 edges: Iterable[Edge] = (),
                 gains: Optional[Dict[Edge, float]] = None,
                 positions: Optional[Sequence[Position]] = None):
        if n < 1:
            raise ValueError("a network needs at least one station")
        self.n = n
        self.gains: Dict[Edge, float] = {}
        self.adjacency: List[set] = [set() for _ in range(n)]
        for i, j in edges:
            if i == j:
                raise ValueError(f"self-loop on station {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"edge ({i}, {j}) outside 0..{n - 1}")
            key = edge_key(i, j)
            if key in self.gains:
                raise ValueError(f"duplicate edge {key}")
            gain = 1.0 if gains is None else gains.get(key, gains.get((key[1], key[0])))
            if gain is None or gain <= 0:
                raise ValueError(f"edge {key} needs a strictly positive gain")
            self.gains[key] = float(gain)
            self.adjacency[i].add(j)
            self.adjacency[j].add(i)
        self.edges: List[Edge] = sorted(self.gains)
        if positions is not None and len(positions) != n:
            raise ValueError("positions must cover every station")
        self.positions: Optional[List[Position]] = (
            [(float(x), float(y)) for x, y in positions] if positions is not None else None)
        self.redraws = 0

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NetworkGraph):
            return NotImplemented
        return (self.n == other.n and self.gains == other.gains
                and self.positions == other.positions)

    def __repr__(self) -> str:
        return f"NetworkGraph(n={self.n}, edges={len(self.edges)})"

    def gain(self, i: int, j: int) -> float:
        return self.gains[edge_key(i, j)]

    def has_edge(self, i: int, j: int) -> bool:
        return edge_key(i, j) in self.gains

    def neighbors(self, i: int) -> set:
        return self.adjacency[i]

    def degrees(self) -> List[int]:
        return [len(a) for a in self.adjacency]

    def degree_stats(self) -> Tuple[float, float]:
        """
        Mean and population standard deviation of the vertex degrees.
        """
        degrees = np.asarray(self.degrees(), dtype=float)
        return float(degrees.mean()), float(degrees.std())

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n))
        for (i, j), gain in self.gains.items():
            graph.add_edge(i, j, gain=gain)
        if self.positions is not None:
            nx.set_node_attributes(graph, dict(enumerate(self.positions)), "pos")
        return graph

    # generators

    @classmethod
    def generate_erdos_renyi(cls,
                             n: int,
                             edge_prob: float,
                             rng: np.random.Generator) -> "NetworkGraph":
        """
        Draws a G(n, p) interference graph.

        Every unordered pair is kept independently with probability `edge_prob`;
        gains are 1.0 since this model carries no channel.

        Args:
            n (int): Number of stations.
            edge_prob (float): Pair inclusion probability.
            rng (np.random.Generator): Seeded generator.

        Returns:
            NetworkGraph: The drawn graph, without positions.

        Raises:
            ValueError: If n < 1 or edge_prob lies outside [0, 1].
        """
        if n < 1:
            raise ValueError("n must be positive")
        if not 0.0 <= edge_prob <= 1.0:
            raise ValueError("edge_prob must be between 0 and 1")
        logger.info(f"Generating Erdos-Renyi graph with n={n}, p={edge_prob}")

        rows, cols = np.triu_indices(n, k=1)
        keep = rng.random(rows.size) < edge_prob
        edges = list(zip(rows[keep].tolist(), cols[keep].tolist()))
        graph = cls(n, edges)
        logger.debug(f"Erdos-Renyi graph has {len(graph.edges)} edges")
        return graph

    @classmethod
    def generate_geometric(cls,
                           lam: float,
                           params: ChannelParams,
                           rng: np.random.Generator) -> "NetworkGraph":
        """
        Draws a random geometric interference network.

        The station count is Poisson(lam), redrawn while zero. Stations are
        uniform on the square deployment area and every pair gets one unit-mean
        exponential fading draw shared by both directions. Draws happen before
        any thresholding, so the same generator state yields the same stations
        and gains for every mu_dbm.

        Args:
            lam (float): Mean station count over the area.
            params (ChannelParams): Channel and threshold parameters.
            rng (np.random.Generator): Seeded generator.

        Returns:
            NetworkGraph: The network with positions; `redraws` holds the
            number of rejected empty draws.

        Raises:
            ValueError: If lam is not strictly positive.
        """
        if lam <= 0:
            raise ValueError("lambda must be positive")
        logger.info(f"Generating geometric network with lambda={lam}, mu={params.mu_dbm} dBm")

        redraws = 0
        n = int(rng.poisson(lam))
        while n == 0:
            redraws += 1
            n = int(rng.poisson(lam))
        if redraws:
            logger.warning(f"Poisson draw returned no stations, redrawn {redraws} times")

        positions = rng.uniform(0.0, params.area_km, size=(n, 2))
        fading = rng.exponential(1.0, size=n * (n - 1) // 2)
        graph = cls.geometric_from_positions(positions, fading, params)
        graph.redraws = redraws
        return graph

    @classmethod
    def geometric_from_positions(cls,
                                 positions: np.ndarray,
                                 fading: np.ndarray,
                                 params: ChannelParams) -> "NetworkGraph":
        """
        Thresholds given positions and per-pair fading into a neighbor graph.

        Args:
            positions (np.ndarray): (n, 2) coordinates in km.
            fading (np.ndarray): One fading power per pair, in np.triu_indices order.
            params (ChannelParams): Channel and threshold parameters.

        Returns:
            NetworkGraph: Edges where received_power_dbm(gain, p_tx) >= mu_dbm.
        """
        positions = np.asarray(positions, dtype=float)
        n = positions.shape[0]
        rows, cols = np.triu_indices(n, k=1)
        fading = np.asarray(fading, dtype=float)
        if fading.size != rows.size:
            raise ValueError("fading needs exactly one draw per station pair")

        delta = positions[rows] - positions[cols]
        distance = np.maximum(np.hypot(delta[:, 0], delta[:, 1]), MIN_DISTANCE_KM)
        reference = 10.0 ** (-params.ref_loss_db / 10.0)
        pair_gains = fading * reference * distance ** (-params.path_loss_exp)

        # coarse vectorized cut; is_neighbor decides on the survivors
        with np.errstate(divide="ignore"):
            power_dbm = 10.0 * np.log10(pair_gains * params.p_tx)
        candidates = np.flatnonzero((pair_gains > 0) & (power_dbm >= params.mu_dbm - 1e-6))

        gains: Dict[Edge, float] = {}
        for i, j, gain in zip(rows[candidates].tolist(), cols[candidates].tolist(),
                              pair_gains[candidates].tolist()):
            if is_neighbor(gain, params):
                gains[(i, j)] = gain
        logger.debug(f"Geometric network: {n} stations, {len(gains)} neighbor pairs")
        return cls(n, gains.keys(), gains, [tuple(p) for p in positions.tolist()])

    # edge-list text format

    def write_edge_list(self) -> str:
        """
        Serializes the graph as `spinalloc-graph v1 n=<n>` followed by one
        `i j gain [xi yi xj yj]` line per edge. Positions of stations that
        touch no edge go on `pos i x y` lines.
        """
        lines = [f"{HEADER_PREFIX} n={self.n}"]
        if self.positions is not None:
            for i in range(self.n):
                if not self.adjacency[i]:
                    x, y = self.positions[i]
                    lines.append(f"pos {i} {x!r} {y!r}")
        for i, j in self.edges:
            line = f"{i} {j} {self.gains[(i, j)]!r}"
            if self.positions is not None:
                (xi, yi), (xj, yj) = self.positions[i], self.positions[j]
                line += f" {xi!r} {yi!r} {xj!r} {yj!r}"
            lines.append(line)
        return "\n".join(lines) + "\n"

    @classmethod
    def parse_edge_list(cls, text: str) -> "NetworkGraph":
        """
        Parses the text written by `write_edge_list`.

        Raises:
            ParseError: On a malformed header or data line, with its line number.
        """
        lines = text.splitlines()
        if not lines:
            raise ParseError("missing header", line=1)
        header = lines[0].strip()
        if not header.startswith(HEADER_PREFIX + " n="):
            raise ParseError(f"expected '{HEADER_PREFIX} n=<n>'", line=1)
        try:
            n = int(header[len(HEADER_PREFIX) + 3:])
        except ValueError:
            raise ParseError("station count is not an integer", line=1)
        if n < 1:
            raise ParseError("station count must be positive", line=1)

        gains: Dict[Edge, float] = {}
        positions: Dict[int, Position] = {}
        saw_positions = False

        def place(station: int, x: float, y: float, lineno: int) -> None:
            if station in positions and positions[station] != (x, y):
                raise ParseError(f"conflicting positions for station {station}", line=lineno)
            positions[station] = (x, y)

        def station_index(token: str, lineno: int) -> int:
            try:
                value = int(token)
            except ValueError:
                raise ParseError(f"station index '{token}' is not an integer", line=lineno)
            if not 0 <= value < n:
                raise ParseError(f"station {value} outside 0..{n - 1}", line=lineno)
            return value

        def number(token: str, lineno: int) -> float:
            try:
                return float(token)
            except ValueError:
                raise ParseError(f"'{token}' is not a number", line=lineno)

        for lineno, raw in enumerate(lines[1:], start=2):
            tokens = raw.split()
            if not tokens:
                continue
            if tokens[0] == "pos":
                if len(tokens) != 4:
                    raise ParseError("expected 'pos i x y'", line=lineno)
                saw_positions = True
                place(station_index(tokens[1], lineno),
                      number(tokens[2], lineno), number(tokens[3], lineno), lineno)
                continue
            if len(tokens) not in (3, 7):
                raise ParseError("expected 'i j gain [xi yi xj yj]'", line=lineno)
            i, j = station_index(tokens[0], lineno), station_index(tokens[1], lineno)
            if i == j:
                raise ParseError(f"self-loop on station {i}", line=lineno)
            key = edge_key(i, j)
            if key in gains:
                raise ParseError(f"duplicate edge {key}", line=lineno)
            gain = number(tokens[2], lineno)
            if not gain > 0:
                raise ParseError("gain must be strictly positive", line=lineno)
            gains[key] = gain
            if len(tokens) == 7:
                saw_positions = True
                xi, yi, xj, yj = (number(t, lineno) for t in tokens[3:])
                place(i, xi, yi, lineno)
                place(j, xj, yj, lineno)
            elif saw_positions:
                raise ParseError("edge line without positions in a positioned graph", line=lineno)

        ordered: Optional[List[Position]] = None
        if saw_positions:
            missing = [i for i in range(n) if i not in positions]
            if missing:
                raise ParseError(f"missing positions for stations {missing}")
            ordered = [positions[i] for i in range(n)]
        return cls(n, gains.keys(), gains, ordered)

    def graph_hash(self) -> str:
        return hashlib.sha256(self.write_edge_list().encode("utf-8")).hexdigest()
