import re
from typing import Optional, Union, Literal, List, Dict, Any
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from app.config import settings


_EDGE_PROB_RULE = re.compile(r"^\s*([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*/\s*I\s*$")

SolverLiteral = Literal["sp", "bp", "mnf", "pmnf", "random"]


class ChannelParams(BaseModel):
    p_tx: float = Field(default=settings.p_tx_mw, gt=0)
    sigma2: float = settings.sigma2
    mu_dbm: float = settings.mu_dbm
    path_loss_exp: float = Field(default=settings.path_loss_exp, gt=0)
    area_km: float = Field(default=settings.area_km, gt=0)
    ref_loss_db: float = settings.ref_loss_db

    model_config = ConfigDict(frozen=True)


class SpParams(BaseModel):
    epsilon: float = Field(default=settings.epsilon, gt=0)
    t_sp_max: int = Field(default=settings.t_sp_max, ge=1)
    # None resolves to n * Q for the instance being solved
    t_max: Optional[int] = Field(default=None, ge=1)
    t_prime_max: int = Field(default=settings.t_prime_max, ge=1)
    eta_zero_tol: Optional[float] = Field(default=None, ge=0)
    follow_bias_sign: bool = False
    bp_damping: float = Field(default=settings.bp_damping, ge=0, lt=1)

    model_config = ConfigDict(frozen=True)

    @property
    def zero_tol(self) -> float:
        return self.epsilon if self.eta_zero_tol is None else self.eta_zero_tol

    def max_steps(self, n: int, q: int) -> int:
        return self.t_max if self.t_max is not None else max(1, n * q)


class SolveStats(BaseModel):
    solver: str
    decimation_steps: int = 0
    sp_runs: int = 0
    sp_sweeps: int = 0
    restarts: int = 0
    fallback_used: bool = False
    contradictions: int = 0
    stopped: bool = False
    runtime_ms: float = 0.0


class ExperimentConfig(BaseModel):
    model: Literal["er", "geo"] = "er"
    i_values: List[int] = Field(min_length=1)
    q_values: List[int] = Field(min_length=1)
    mu_dbm: float = settings.mu_dbm
    mu_values: Optional[List[float]] = None
    edge_prob_rule: Union[float, str] = "4.5/I"
    station_count: Literal["fixed", "poisson"] = "fixed"
    z: int = Field(default=1, ge=1)
    master_seed: int = Field(default=0, ge=0, lt=2**64)
    solvers: List[SolverLiteral] = Field(min_length=1)
    sp_params: SpParams = SpParams()
    compute_delta: bool = False
    delta_samples: int = Field(default=settings.delta_samples, ge=1)
    workers: int = Field(default=1, ge=1)
    out_dir: Optional[str] = None

    @field_validator("i_values", "q_values")
    @classmethod
    def positive_counts(cls, values: List[int]) -> List[int]:
        if any(v < 1 for v in values):
            raise ValueError("station and pool counts must be >= 1")
        return values

    @field_validator("edge_prob_rule")
    @classmethod
    def valid_edge_prob_rule(cls, rule: Union[float, str]) -> Union[float, str]:
        if isinstance(rule, str):
            if not _EDGE_PROB_RULE.match(rule):
                raise ValueError("edge_prob_rule must be a probability or '<c>/I'")
        elif not 0.0 <= rule <= 1.0:
            raise ValueError("edge_prob_rule probability must lie in [0, 1]")
        return rule

    @model_validator(mode="after")
    def unique_solvers(self) -> "ExperimentConfig":
        if len(set(self.solvers)) != len(self.solvers):
            raise ValueError("solvers must not repeat")
        if self.mu_values is not None and not self.mu_values:
            raise ValueError("mu_values must not be empty")
        return self

    def edge_prob(self, i_target: int) -> float:
        """
        Resolves the ER edge probability for a target station count.

        Args:
            i_target (int): The target number of stations I.

        Returns:
            float: The fixed probability, or c / I clipped to [0, 1].
        """
        if isinstance(self.edge_prob_rule, str):
            c = float(_EDGE_PROB_RULE.match(self.edge_prob_rule).group(1))
            return min(1.0, c / i_target)
        return float(self.edge_prob_rule)

    def thresholds(self) -> List[Optional[float]]:
        if self.model == "er":
            return [None]
        return list(self.mu_values) if self.mu_values else [self.mu_dbm]

    def run_count(self) -> int:
        return (len(self.i_values) * len(self.q_values) * len(self.thresholds())
                * self.z * len(self.solvers))

    @classmethod
    def preset(cls, name: str, **overrides: Any) -> "ExperimentConfig":
        """
        Builds one of the named evaluation scenarios at full scale (z=500).

        Raises:
            KeyError: If the preset name is unknown.
        """
        data: Dict[str, Any] = dict(PRESETS[name])
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)


ALL_SOLVERS: List[str] = ["sp", "bp", "mnf", "pmnf", "random"]

PRESETS: Dict[str, Dict[str, Any]] = {
    "er-size-sweep": {"model": "er", "i_values": [100, 200, 300, 400, 500],
                      "q_values": [3], "z": 500, "solvers": ALL_SOLVERS},
    "er-pool-sweep": {"model": "er", "i_values": [100], "q_values": list(range(3, 11)),
                      "z": 500, "solvers": ALL_SOLVERS},
    "geo-size-sweep": {"model": "geo", "i_values": [50, 100, 150, 200, 250, 300],
                       "q_values": [5], "mu_dbm": -75.0, "z": 500, "solvers": ALL_SOLVERS},
    "geo-pool-sweep": {"model": "geo", "i_values": [100], "q_values": list(range(3, 11)),
                       "mu_dbm": -75.0, "z": 500, "solvers": ALL_SOLVERS},
    "geo-threshold-sweep": {"model": "geo", "i_values": [100], "q_values": [6],
                            "mu_values": [float(m) for m in range(-86, -69, 2)],
                            "z": 500, "solvers": ALL_SOLVERS},
}


class ExperimentRecord(BaseModel):
    model: str
    i_target: int
    i_actual: int
    q: int
    mu_dbm: Optional[float] = None
    realization: int
    solver: str
    interference_links: int = Field(ge=0)
    zero_interference: bool
    cost: int = Field(ge=0)
    avg_degree: float
    degree_std: float
    delta: Optional[float] = None
    sp_iterations: int = 0
    sp_restarts: int = 0
    fallback_used: bool = False
    runtime_ms: float = 0.0
    seed: int
    graph_hash: str

    @model_validator(mode="after")
    def zero_flag_matches_links(self) -> "ExperimentRecord":
        if self.zero_interference != (self.interference_links == 0):
            raise ValueError("zero_interference must equal interference_links == 0")
        return self


class SummaryRow(BaseModel):
    model: str
    i_target: int
    q: int
    mu_dbm: Optional[float] = None
    solver: str
    z: int
    zero_rate_pct: float
    mean_conflicts: float
    std_conflicts: float
    mean_degree: float
    mean_delta: Optional[float] = None


# HTTP bodies

class GenerateRequest(BaseModel):
    model: Literal["er", "geo"] = "er"
    stations: int = Field(ge=1)
    edge_prob: Optional[float] = Field(default=None, ge=0, le=1)
    mu_dbm: Optional[float] = None
    seed: int = Field(default=0, ge=0, lt=2**64)


class EdgeOut(BaseModel):
    i: int
    j: int
    gain: float


class NetworkOut(BaseModel):
    n: int
    edges: List[EdgeOut]
    positions: Optional[List[List[float]]] = None
    avg_degree: float
    degree_std: float
    graph_hash: str
    edge_list: str


class SolveRequest(BaseModel):
    edge_list: str
    pools: int = Field(ge=1)
    solver: SolverLiteral = "sp"
    seed: int = Field(default=0, ge=0, lt=2**64)


class SolveOut(BaseModel):
    solver: str
    assignment: List[int]
    interference_links: int
    cost: int
    zero_interference: bool
    stats: SolveStats


class HyperbolicityRequest(BaseModel):
    edge_list: str
    mode: Literal["exact", "sampled"] = "exact"
    samples: int = Field(default=settings.delta_samples, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)


class HyperbolicityOut(BaseModel):
    delta: float
    components: int
    diameter: int

