"""Scenario parameters of a cascade run."""

from typing import Any, Dict, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.core.ingest.generator import DOMINANT_ASSET_ID


class ScenarioConfig(BaseModel):
    """
    One shock scenario.

    ``eta`` is the fraction of value a shocked asset keeps; thresholds and
    failure costs are rates of each fund's pre-shock outside value.
    ``critical_values`` optionally pins absolute thresholds for named funds.
    """

    model_config = ConfigDict(frozen=True)

    shocked_assets: Tuple[str, ...] = Field(min_length=1)
    eta: float = Field(ge=0.0, lt=1.0)
    crit_rate: float = Field(gt=0.0, lt=1.0)
    beta_rate: float = Field(default=0.0, ge=0.0, le=1.0)
    omega: float = Field(default=0.0, ge=0.0, le=1.0)
    max_iterations: Optional[int] = Field(default=None, gt=0)
    allow_cash: bool = False
    critical_values: Dict[str, float] = Field(default_factory=dict)

    @field_validator("shocked_assets", mode="before")
    @classmethod
    def split_assets(cls, v: Any) -> Tuple[str, ...]:
        if isinstance(v, str):
            v = v.split(",")
        seen = []
        for asset in v:
            asset = str(asset).strip()
            if asset and asset not in seen:
                seen.append(asset)
        return tuple(seen)

    @field_validator("critical_values")
    @classmethod
    def validate_critical_values(cls, v: Dict[str, float]) -> Dict[str, float]:
        if any(value < 0 for value in v.values()):
            raise ValueError("critical values must be non-negative")
        return v

    def with_updates(self, **changes: Any) -> "ScenarioConfig":
        """Copy with changes, validated like a fresh config."""
        return ScenarioConfig(**{**self.model_dump(), **changes})

    def parameters(self) -> Dict[str, Any]:
        return {
            "shocked_assets": ",".join(self.shocked_assets),
            "eta": self.eta,
            "crit_rate": self.crit_rate,
            "beta_rate": self.beta_rate,
            "omega": self.omega,
        }


# 30% shock, 70% critical value rate
SEVERE_SHOCK_PRESET = ScenarioConfig(
    shocked_assets=(DOMINANT_ASSET_ID,), eta=0.70, crit_rate=0.70, beta_rate=0.1, omega=0.3
)

# 15% shock, 85% critical value rate
MILD_SHOCK_PRESET = ScenarioConfig(
    shocked_assets=(DOMINANT_ASSET_ID,), eta=0.85, crit_rate=0.85, beta_rate=0.1, omega=0.3
)

PRESETS: Dict[str, ScenarioConfig] = {
    "severe": SEVERE_SHOCK_PRESET,
    "mild": MILD_SHOCK_PRESET,
}
