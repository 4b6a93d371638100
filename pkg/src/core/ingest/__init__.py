"""Snapshot ingestion, serialization and synthetic generation."""

from .generator import (
    CASH_ASSET_ID,
    DOMINANT_ASSET_ID,
    GeneratorConfig,
    check_feasible,
    generate_market,
)
from .loader import (
    load_bundle,
    load_series,
    load_snapshot,
    save_snapshot,
    snapshot_from_dict,
    snapshot_from_frames,
    snapshot_from_json,
    snapshot_to_dict,
    snapshot_to_json,
)
from .series import check_symbols, snapshot_series, stability_graphs, synthetic_series
from .snapshot import MarketSnapshot, SymbolTable, snapshot_from_parts

__all__ = [
    "CASH_ASSET_ID",
    "DOMINANT_ASSET_ID",
    "GeneratorConfig",
    "check_feasible",
    "generate_market",
    "load_bundle",
    "load_series",
    "load_snapshot",
    "save_snapshot",
    "snapshot_from_dict",
    "snapshot_from_frames",
    "snapshot_from_json",
    "snapshot_to_dict",
    "snapshot_to_json",
    "check_symbols",
    "snapshot_series",
    "stability_graphs",
    "synthetic_series",
    "MarketSnapshot",
    "SymbolTable",
    "snapshot_from_parts",
]
