from fastapi import status, APIRouter, HTTPException
import numpy as np
from app import schemas
from app.config import logger
from app.errors import SpinallocError
from app.models.factorGraph import FactorGraph
from app.routers.network import parse_graph
from app.services.experimentService import run_solver
from app.services.metricsService import interference_links

router = APIRouter(
    prefix="/allocations",
    tags=['Allocations']
)


@router.post("/solve", response_model=schemas.SolveOut, responses={
    422: {
        "description": "If the edge list is malformed.",
        "content": {
            "application/json": {
                "example": {
                    "detail": "line 3: duplicate edge (0, 1)"
                }
            }
        }
    },
    413: {
        "description": "If the network exceeds the service limit.",
        "content": {
            "application/json": {
                "example": {
                    "detail": "At most 2000 stations are served"
                }
            }
        }
    },
})
def solve_allocation(request: schemas.SolveRequest) -> schemas.SolveOut:
    """
    Allocate one of `pools` resource pools to every station of the posted
    network with the chosen solver. Pools in the answer are numbered from 1.

    """
    logger.info(f"POST request to solve with {request.solver}, Q={request.pools}.")
    g = parse_graph(request.edge_list)
    try:
        allocation, stats = run_solver(request.solver, g, request.pools, schemas.SpParams(),
                                       np.random.default_rng(request.seed))
    except SpinallocError as e:
        logger.warning(f"Solver {request.solver} failed: {e}")
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(e))

    scorer = FactorGraph.build_csp(g, request.pools)
    logger.debug(f"Solved with stats {stats}")
    return schemas.SolveOut(
        solver=request.solver,
        assignment=[p + 1 for p in allocation.pools()],
        interference_links=interference_links(g, allocation),
        cost=scorer.cost(allocation),
        zero_interference=scorer.is_zero_interference(allocation),
        stats=stats)
