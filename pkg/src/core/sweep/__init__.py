"""Parameter-grid experiments over cascade scenarios."""

from .heatmap import Z_COLUMNS, heatmap_export, heatmap_frame
from .runner import (
    PARAMETERS,
    SWEEP_COLUMNS,
    SweepResult,
    SweepRow,
    SweepSpec,
    axis,
    parse_values,
    run_point,
    run_sweep,
    spot_check,
    summary_table,
)

__all__ = [
    "Z_COLUMNS",
    "heatmap_export",
    "heatmap_frame",
    "PARAMETERS",
    "SWEEP_COLUMNS",
    "SweepResult",
    "SweepRow",
    "SweepSpec",
    "axis",
    "parse_values",
    "run_point",
    "run_sweep",
    "spot_check",
    "summary_table",
]
