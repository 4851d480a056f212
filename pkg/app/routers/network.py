from fastapi import status, APIRouter, HTTPException
import numpy as np
from app import schemas
from app.config import logger, settings
from app.errors import ParseError
from app.models.network import NetworkGraph

router = APIRouter(
    prefix="/networks",
    tags=['Networks']
)

DEFAULT_MEAN_DEGREE = 4.5


def parse_graph(edge_list: str) -> NetworkGraph:
    """
    Parses an edge list sent in a request body.

    Raises:
        HTTPException: 422 on malformed text, 413 above settings.api_max_stations.
    """
    try:
        g = NetworkGraph.parse_edge_list(edge_list)
    except ParseError as e:
        logger.warning(f"Rejected edge list: {e}")
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(e))
    check_size(g.n)
    return g


def check_size(n: int) -> None:
    if n > settings.api_max_stations:
        logger.warning(f"Request for {n} stations exceeds {settings.api_max_stations}")
        raise HTTPException(status_code=status.HTTP_413_REQUEST_ENTITY_TOO_LARGE,
                            detail=f"At most {settings.api_max_stations} stations are served")


def network_out(g: NetworkGraph) -> schemas.NetworkOut:
    avg_degree, degree_std = g.degree_stats()
    return schemas.NetworkOut(
        n=g.n,
        edges=[schemas.EdgeOut(i=i, j=j, gain=gain) for (i, j), gain in sorted(g.gains.items())],
        positions=[list(p) for p in g.positions] if g.positions is not None else None,
        avg_degree=avg_degree,
        degree_std=degree_std,
        graph_hash=g.graph_hash(),
        edge_list=g.write_edge_list())


@router.post("/generate", response_model=schemas.NetworkOut, responses={
    413: {
        "description": "If the requested station count exceeds the service limit.",
        "content": {
            "application/json": {
                "example": {
                    "detail": "At most 2000 stations are served"
                }
            }
        }
    },
})
def generate_network(request: schemas.GenerateRequest) -> schemas.NetworkOut:
    """
    Draw a random interference network. The Erdos-Renyi model uses `stations`
    as n and `edge_prob` (default 4.5/n); the geometric model uses `stations`
    as the Poisson mean and `mu_dbm` as the neighbor threshold.
    The same seed always returns the same network.

    """
    logger.info(f"POST request to generate a {request.model} network with {request.stations} stations.")
    check_size(request.stations)
    rng = np.random.default_rng(request.seed)

    if request.model == "er":
        edge_prob = request.edge_prob if request.edge_prob is not None \
            else min(1.0, DEFAULT_MEAN_DEGREE / request.stations)
        g = NetworkGraph.generate_erdos_renyi(request.stations, edge_prob, rng)
    else:
        mu_dbm = request.mu_dbm if request.mu_dbm is not None else settings.mu_dbm
        g = NetworkGraph.generate_geometric(request.stations, schemas.ChannelParams(mu_dbm=mu_dbm), rng)
    logger.debug(f"Generated {g}")
    return network_out(g)
