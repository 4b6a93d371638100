"""Application settings using Pydantic for validation."""

from typing import List, Optional

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Toolkit settings with environment variable support (prefix ``FUNDNET_``)."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="FUNDNET_",
        case_sensitive=False,
    )

    # Application
    log_level: str = Field(default="INFO", description="Logging level")
    log_file: Optional[str] = Field(default=None, description="Optional log file path")
    output_dir: str = Field(default="fundnet-out", description="Default output directory")

    # Valuation
    outside_share_epsilon: float = Field(
        default=1e-6, description="Minimum outside-investor share of every fund"
    )
    direct_solver_max_funds: int = Field(
        default=20000, description="Largest fund count solved by sparse LU"
    )
    iterative_tolerance: float = Field(
        default=1e-12, description="Residual target of the fixed-point solver"
    )
    iterative_max_iterations: int = Field(
        default=10000, description="Iteration cap of the fixed-point solver"
    )

    # Metrics
    eigenvector_tolerance: float = Field(
        default=1e-10, description="Max-norm step tolerance of power iteration"
    )
    eigenvector_max_iterations: int = Field(
        default=1000, description="Power iteration cap"
    )

    # Sweeps
    sweep_jobs: int = Field(default=1, description="Worker processes for sweeps")
    sweep_grid_points: int = Field(default=20, description="Default points per axis")

    # Ingestion
    cash_asset_ids: List[str] = Field(
        default=["CASH"], description="Assets treated as cash"
    )

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Validate log level."""
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        if v.upper() not in valid_levels:
            raise ValueError(f"Invalid log level. Must be one of: {valid_levels}")
        return v.upper()

    @field_validator("outside_share_epsilon", "iterative_tolerance", "eigenvector_tolerance")
    @classmethod
    def validate_positive(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("tolerances must be positive")
        return v

    @field_validator("sweep_jobs", "sweep_grid_points", "eigenvector_max_iterations")
    @classmethod
    def validate_count(cls, v: int) -> int:
        if v < 1:
            raise ValueError("counts must be at least 1")
        return v


# Create global settings instance
settings = Settings()
