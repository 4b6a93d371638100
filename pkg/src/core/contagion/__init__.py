"""Cascading-failure simulation over cross-holdings and fire sales."""

from .engine import (
    AssetImpact,
    CascadeContext,
    CascadeResult,
    CascadeState,
    TerminationReason,
    apply_shock,
    asset_impact_scan,
    cascade_step,
    check_equilibrium,
    fire_sale_factor,
    fire_sale_factors,
    impact_frame,
    initial_state,
    run_cascade,
)
from .scenario import MILD_SHOCK_PRESET, PRESETS, SEVERE_SHOCK_PRESET, ScenarioConfig

__all__ = [
    "AssetImpact",
    "CascadeContext",
    "CascadeResult",
    "CascadeState",
    "TerminationReason",
    "apply_shock",
    "asset_impact_scan",
    "cascade_step",
    "check_equilibrium",
    "fire_sale_factor",
    "fire_sale_factors",
    "impact_frame",
    "initial_state",
    "run_cascade",
    "MILD_SHOCK_PRESET",
    "PRESETS",
    "SEVERE_SHOCK_PRESET",
    "ScenarioConfig",
]
