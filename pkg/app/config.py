from pydantic_settings import BaseSettings
from typing import List
import logging
from logging.handlers import RotatingFileHandler


class Settings(BaseSettings):
    log_file: str = "spinalloc.log"
    log_level: str = "DEBUG"
    log_max_bytes: int = 5 * 1024 * 1024
    log_backup_count: int = 2

    # channel model
    p_tx_mw: float = 100.0
    sigma2: float = 1.0
    mu_dbm: float = -75.0
    path_loss_exp: float = 3.0
    area_km: float = 1.0
    ref_loss_db: float = 120.0

    # message passing
    epsilon: float = 1e-3
    t_sp_max: int = 10
    t_prime_max: int = 5
    bp_damping: float = 0.5

    # guards
    exact_delta_max_n: int = 80
    delta_samples: int = 100_000
    brute_force_limit: int = 10**7
    api_max_stations: int = 2000
    api_max_runs: int = 200

    cors_origins: List[str] = ["http://localhost", "http://localhost:8000"]

    class Config:
        env_file = "_env"
        env_file_encoding = "utf-8"


try:
    settings = Settings()
except Exception as e:
    raise ValueError("Failed to load settings:") from e

handler = RotatingFileHandler(
    settings.log_file,
    maxBytes=settings.log_max_bytes,
    backupCount=settings.log_backup_count
)

formatter = logging.Formatter(
    "%(asctime)s - %(name)s - %(levelname)s - %(message)s")
handler.setFormatter(formatter)

logger = logging.getLogger("spinalloc")
logger.setLevel(settings.log_level)
logger.addHandler(handler)
