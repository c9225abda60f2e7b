"""Configuration for the lorenz-measures toolkit"""

import logging
from functools import lru_cache
from typing import Optional

from dotenv import load_dotenv
from pydantic_settings import BaseSettings, SettingsConfigDict

# Load environment variables
load_dotenv()

# Report schema
SCHEMA = "lorenz-measures/1"

# Orbit engine
C_TOL = 1e-11
MP_PREC = 256
PRECISION_RETRIES = 3
BOUND_BUDGET_FRACTION = 1e-2
HORIZON = 2000
ROUNDING_ULPS = 6

# Non-flat constants
GRID_POINTS = 1000
GRID_MIN_OFFSET = 1e-12
A_PAD = 1e-4
A_QUANTUM = 0.01
HOLDER_PAD = 1.2
HOLDER_LEVELS = 10

# Recurrence
DELTA = 0.5

# Induced Markov structure
R_MAX = 40
N_DEPTH = 30
MAX_WORD_LEN = 12
MIN_WIDTH_REL = 1e-5
PIECE_CAP = 200_000
LINEAR_SWITCH = 1e-6
RESOLUTION_FLOOR = 1e-300

# Measures
ZETA_TOL = 1e-12
ZETA_DIRECT_TERMS = 1000
N_LEVELS_SQ = 10_000
SURROGATE_ALPHA = 1.5
DIVERGENCE_FACTOR = 10.0
DIVERGENCE_MAX_DECADE = 12
MAX_SAMPLE_LEVEL = 1000
SUPPORT_NET = 1e-2
BLOCK_LEN = 12

# Perturbation
DEPTH_MAX = 60
SHOOT_TOL = 1e-12
JOINT_TOL = 1e-13
JOINT_ROUNDS = 50

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"


class Settings(BaseSettings):
    """Runtime settings read from LORENZ_* environment variables and .env."""

    model_config = SettingsConfigDict(env_prefix="LORENZ_", env_file=".env", extra="ignore")

    log_level: str = "INFO"
    out_dir: str = "out"
    c_tol: float = C_TOL
    mp_prec: int = MP_PREC
    precision_retries: int = PRECISION_RETRIES
    progress: bool = False
    piece_cap: int = PIECE_CAP


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return Settings()


def setup_logging(level: Optional[str] = None) -> None:
    """Configure root logging once for command-line use."""
    logging.basicConfig(
        level=getattr(logging, (level or get_settings().log_level).upper(), logging.INFO),
        format=LOG_FORMAT,
    )
