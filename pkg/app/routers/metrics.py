from fastapi import status, APIRouter, HTTPException
import numpy as np
from app import schemas
from app.config import logger
from app.errors import InstanceTooLargeError
from app.models.base import DeltaMode
from app.routers.network import parse_graph
from app.services.metricsService import all_pairs_hops, delta_hyperbolicity

router = APIRouter(
    prefix="/metrics",
    tags=['Metrics']
)


@router.post("/hyperbolicity", response_model=schemas.HyperbolicityOut, responses={
    413: {
        "description": "If exact mode is asked for a network above the enumeration limit.",
        "content": {
            "application/json": {
                "example": {
                    "detail": "exact delta is limited to 80 stations, got 120"
                }
            }
        }
    },
})
def hyperbolicity(request: schemas.HyperbolicityRequest) -> schemas.HyperbolicityOut:
    """
    Gromov delta of the posted network's hop metric, with its number of
    connected components and its diameter.

    """
    logger.info(f"POST request for {request.mode} hyperbolicity.")
    g = parse_graph(request.edge_list)
    try:
        delta = delta_hyperbolicity(g, DeltaMode(request.mode), request.samples,
                                    np.random.default_rng(request.seed))
    except InstanceTooLargeError as e:
        logger.warning(f"Hyperbolicity refused: {e}")
        raise HTTPException(status_code=status.HTTP_413_REQUEST_ENTITY_TOO_LARGE, detail=str(e))
    distances = all_pairs_hops(g)
    return schemas.HyperbolicityOut(delta=delta,
                                    components=distances.component_count(),
                                    diameter=distances.diameter())
