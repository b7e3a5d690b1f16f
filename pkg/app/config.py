"""Application configuration using pydantic-settings."""

from functools import lru_cache
from typing import Literal

from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Toolkit settings loaded from environment variables."""

    # Application
    app_name: str = "privacy-amplification-toolkit"
    debug: bool = False

    # Field arithmetic
    karatsuba_threshold_words: int = 64  # 64-bit words

    # Exhaustive enumeration (seeds x input pairs)
    audit_budget: int = 2**28

    # Linear algebra
    eig_backend: Literal["jacobi", "lapack"] = "jacobi"
    jacobi_max_sweeps: int = 100
    support_cutoff: float = 1e-10  # relative to the largest eigenvalue

    # Min-entropy solver
    hmin_tol: float = 1e-8
    hmin_sdp_solver: str = "CLARABEL"
    hmin_max_iter: int = 2000  # fixed-point refinement steps

    # Verification harness
    verify_tolerance: float = 1e-7
    verify_chunk_size: int = 25

    # Celery
    celery_broker_url: str = "redis://localhost:6379/0"
    celery_result_backend: str = "redis://localhost:6379/1"
    celery_task_always_eager: bool = True

    class Config:
        env_file = ".env"
        extra = "ignore"

    @property
    def slack(self) -> float:
        """Slack granted to every inequality check of the harness."""
        return 3 * self.verify_tolerance


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()
