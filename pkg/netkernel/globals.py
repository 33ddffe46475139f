import os
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

# Load environment variables at module import
load_dotenv()


def get_env_path(env_var: str, default: str) -> Path:
    """Get path from environment variable or default."""
    return Path(os.getenv(env_var, default))


class DEFAULT_DIRS:
    """Default directories for netkernel."""

    # Base directories
    BASE_DIR = Path(__file__).parent.parent
    DATA_DIR = get_env_path("NETKERNEL_DATA_DIR", str(BASE_DIR / "data"))

    # Experiment artifacts (trajectory files, tables, summaries)
    OUTPUT_DIR = get_env_path("NETKERNEL_OUTPUT_DIR", str(DATA_DIR / "output"))


def _env_int(name: str, default: Optional[int]) -> Optional[int]:
    value = os.getenv(name)
    if value is None or value == "":
        return default
    return int(value)


class Config:
    """Runtime settings read from the environment."""

    # Worker threads for trajectory-parallel loops
    THREADS: Optional[int] = _env_int("NETKERNEL_THREADS", None)

    # Logging settings
    LOG_LEVEL: str = os.getenv("NETKERNEL_LOG_LEVEL", "INFO")

    # Trajectories per assembly chunk; fixed so reductions do not depend on the thread count
    CHUNK_TRAJECTORIES: int = int(os.getenv("NETKERNEL_CHUNK_TRAJECTORIES", "32"))

    # Pair-feature tensors up to this size are cached across ALS iterations
    FEATURE_CACHE_MB: float = float(os.getenv("NETKERNEL_FEATURE_CACHE_MB", "256"))

    @classmethod
    def validate(cls) -> None:
        """Validate configuration values."""
        if cls.THREADS is not None and cls.THREADS < 1:
            raise ValueError("NETKERNEL_THREADS must be a positive integer")
        if cls.CHUNK_TRAJECTORIES < 1:
            raise ValueError("NETKERNEL_CHUNK_TRAJECTORIES must be a positive integer")
        if cls.FEATURE_CACHE_MB < 0:
            raise ValueError("NETKERNEL_FEATURE_CACHE_MB must be nonnegative")
