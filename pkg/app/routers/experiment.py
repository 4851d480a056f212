from typing import List
from fastapi import status, APIRouter, HTTPException
from app import schemas
from app.config import logger, settings
from app.errors import SpinallocError
from app.services import experimentService

router = APIRouter(
    prefix="/experiments",
    tags=['Experiments']
)


@router.post("/run", response_model=List[schemas.SummaryRow], responses={
    413: {
        "description": "If the configuration asks for more solver runs than the service allows.",
        "content": {
            "application/json": {
                "example": {
                    "detail": "At most 200 solver runs per request"
                }
            }
        }
    },
})
def run_experiment(cfg: schemas.ExperimentConfig) -> List[schemas.SummaryRow]:
    """
    Run a small seeded experiment and return its summary table. Nothing is
    written to disk; `out_dir` is ignored.

    """
    logger.info(f"POST request to run an experiment of {cfg.run_count()} solver runs.")
    if cfg.run_count() > settings.api_max_runs:
        logger.warning(f"Experiment of {cfg.run_count()} runs refused")
        raise HTTPException(status_code=status.HTTP_413_REQUEST_ENTITY_TOO_LARGE,
                            detail=f"At most {settings.api_max_runs} solver runs per request")
    cfg = cfg.model_copy(update={"out_dir": None, "workers": 1})
    try:
        records = experimentService.run_experiment(cfg)
        return experimentService.aggregate(records)
    except SpinallocError as e:
        logger.warning(f"Experiment failed: {e}")
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(e))
