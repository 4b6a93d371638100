"""CSV and JSON ingestion of market snapshots.

Bundle layout (one directory per date)::

    <date>/funds.csv          fund_id, class, administrator, open_ended
    <date>/assets.csv         asset_id, class, price
    <date>/crossholdings.csv  investor_fund_id, investee_fund_id, fraction
    <date>/holdings.csv       fund_id, asset_id, value
    <date>/manifest.json      date, summary, metadata (optional on load)
"""

import json
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from src.core.exceptions import (
    DuplicateRow,
    FundNetError,
    MarketValidationError,
    ParseError,
    UnresolvedReference,
)
from src.core.ingest.snapshot import (
    ASSET_COLUMNS,
    CROSSHOLDING_COLUMNS,
    FUND_COLUMNS,
    HOLDING_COLUMNS,
    MarketSnapshot,
    SymbolTable,
    snapshot_from_parts,
)
from src.core.valuation import build_cross_holdings, build_holdings
from src.utils import get_logger

logger = get_logger(__name__)

PathLike = Union[str, Path]

FUNDS_FILE = "funds.csv"
ASSETS_FILE = "assets.csv"
CROSSHOLDINGS_FILE = "crossholdings.csv"
HOLDINGS_FILE = "holdings.csv"
MANIFEST_FILE = "manifest.json"
BUNDLE_FILES = (FUNDS_FILE, ASSETS_FILE, CROSSHOLDINGS_FILE, HOLDINGS_FILE)


def _read_table(path: Path, columns: List[str]) -> pd.DataFrame:
    """Read a CSV as strings, checking the header."""
    try:
        frame = pd.read_csv(
            path, dtype=str, keep_default_na=False, encoding="utf-8"
        )
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise ParseError(str(path), 0, None, str(e)) from e

    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise ParseError(str(path), 1, missing[0], "missing column")
    return frame[columns].reset_index(drop=True)


def _parse_floats(series: pd.Series, path: str, column: str) -> np.ndarray:
    values = np.empty(len(series), dtype=float)
    for k, text in enumerate(series):
        try:
            value = float(text)
        except (TypeError, ValueError):
            raise ParseError(path, k + 2, column, f"not a number: {text!r}") from None
        if not math.isfinite(value):
            raise ParseError(path, k + 2, column, f"not a finite number: {text!r}")
        values[k] = value
    return values


def _parse_flags(series: pd.Series, path: str, column: str) -> np.ndarray:
    flags = np.empty(len(series), dtype=bool)
    for k, text in enumerate(series):
        text = str(text).strip()
        if text not in ("0", "1"):
            raise ParseError(path, k + 2, column, f"expected 0 or 1, got {text!r}")
        flags[k] = text == "1"
    return flags


def _check_ids(series: pd.Series, path: str, column: str) -> None:
    for k, text in enumerate(series):
        if not str(text).strip():
            raise ParseError(path, k + 2, column, "empty identifier")


def _check_unique(frame: pd.DataFrame, keys: List[str], path: str) -> None:
    duplicated = frame.duplicated(subset=keys)
    if duplicated.any():
        row = frame[duplicated].iloc[0]
        key = tuple(row[k] for k in keys)
        raise DuplicateRow(path, key[0] if len(key) == 1 else key)


def _resolve(table: SymbolTable, series: pd.Series, path: str) -> np.ndarray:
    indices = np.empty(len(series), dtype=np.int64)
    for k, identifier in enumerate(series):
        if identifier not in table:
            raise UnresolvedReference(table.kind, str(identifier), path)
        indices[k] = table.index[identifier]
    return indices


def snapshot_from_frames(
    funds: pd.DataFrame,
    assets: pd.DataFrame,
    crossholdings: pd.DataFrame,
    holdings: pd.DataFrame,
    date: str = "",
    metadata: Optional[Dict[str, Any]] = None,
    sources: Optional[Dict[str, str]] = None,
) -> MarketSnapshot:
    """
    Validate four tables and assemble a snapshot.

    Frames must carry the CSV columns; values may still be strings.

    Raises:
        ParseError, DuplicateRow, UnresolvedReference, MarketValidationError
    """
    sources = {
        "funds": FUNDS_FILE,
        "assets": ASSETS_FILE,
        "crossholdings": CROSSHOLDINGS_FILE,
        "holdings": HOLDINGS_FILE,
        **(sources or {}),
    }
    funds = funds.astype({"fund_id": str, "class": str, "administrator": str})
    assets = assets.astype({"asset_id": str, "class": str})
    crossholdings = crossholdings.astype({"investor_fund_id": str, "investee_fund_id": str})
    holdings = holdings.astype({"fund_id": str, "asset_id": str})

    # Symbol tables
    _check_ids(funds["fund_id"], sources["funds"], "fund_id")
    _check_unique(funds, ["fund_id"], sources["funds"])
    _check_ids(assets["asset_id"], sources["assets"], "asset_id")
    _check_unique(assets, ["asset_id"], sources["assets"])
    fund_table = SymbolTable.from_ids("fund", funds["fund_id"])
    asset_table = SymbolTable.from_ids("asset", assets["asset_id"])

    open_ended = _parse_flags(funds["open_ended"].astype(str), sources["funds"], "open_ended")
    prices = _parse_floats(assets["price"], sources["assets"], "price")
    nonpositive = np.flatnonzero(prices <= 0)
    if len(nonpositive):
        j = int(nonpositive[0])
        raise MarketValidationError(
            "NegativePrice", f"asset {asset_table.ids[j]} has price {prices[j]}"
        )

    # Edges
    _check_unique(crossholdings, ["investor_fund_id", "investee_fund_id"], sources["crossholdings"])
    investors = _resolve(fund_table, crossholdings["investor_fund_id"], sources["crossholdings"])
    investees = _resolve(fund_table, crossholdings["investee_fund_id"], sources["crossholdings"])
    fractions = _parse_floats(crossholdings["fraction"], sources["crossholdings"], "fraction")

    _check_unique(holdings, ["fund_id", "asset_id"], sources["holdings"])
    holders = _resolve(fund_table, holdings["fund_id"], sources["holdings"])
    held = _resolve(asset_table, holdings["asset_id"], sources["holdings"])
    values = _parse_floats(holdings["value"], sources["holdings"], "value")

    # Assets with no positive position have no defined share column
    held_value = np.zeros(len(asset_table))
    np.add.at(held_value, held, np.clip(values, 0.0, None))
    keep = held_value > 0
    dropped = int((~keep).sum())
    if dropped:
        logger.warning(f"Dropping {dropped} assets without holders from snapshot {date!r}")
    remap = np.full(len(asset_table), -1, dtype=np.int64)
    remap[keep] = np.arange(int(keep.sum()))
    rows = remap[held] >= 0
    asset_ids = [a for a, k in zip(asset_table.ids, keep) if k]
    asset_class = [c for c, k in zip(assets["class"], keep) if k]

    try:
        cross = build_cross_holdings(
            zip(investors.tolist(), investees.tolist(), fractions.tolist()),
            n=len(fund_table),
            fund_ids=fund_table.ids,
        )
        positions = build_holdings(
            zip(holders[rows].tolist(), remap[held[rows]].tolist(), values[rows].tolist()),
            prices=prices[keep],
            n_funds=len(fund_table),
            fund_ids=fund_table.ids,
            asset_ids=asset_ids,
        )
    except FundNetError as e:
        raise MarketValidationError(type(e).__name__, str(e)) from e

    metadata = dict(metadata or {})
    if dropped:
        metadata["dropped_assets"] = dropped

    snapshot = snapshot_from_parts(
        date=date,
        fund_ids=fund_table.ids,
        fund_class=funds["class"].tolist(),
        administrator=funds["administrator"].tolist(),
        open_ended=open_ended,
        asset_ids=asset_ids,
        asset_class=asset_class,
        cross_holdings=cross,
        holdings=positions,
        metadata=metadata,
    )
    logger.debug(
        f"Snapshot {date!r}: {snapshot.n_funds} funds, {snapshot.n_assets} assets, "
        f"{cross.matrix.nnz} cross-holdings, {positions.values.nnz} holdings"
    )
    return snapshot


def load_snapshot(
    funds_file: PathLike,
    assets_file: PathLike,
    crossholdings_file: PathLike,
    holdings_file: PathLike,
    date: str = "",
    metadata: Optional[Dict[str, Any]] = None,
) -> MarketSnapshot:
    """
    Load and validate a snapshot from its four CSV files.

    Raises:
        OSError: a file is missing or unreadable
        ParseError, DuplicateRow, UnresolvedReference, MarketValidationError
    """
    paths = {
        "funds": Path(funds_file),
        "assets": Path(assets_file),
        "crossholdings": Path(crossholdings_file),
        "holdings": Path(holdings_file),
    }
    columns = {
        "funds": FUND_COLUMNS,
        "assets": ASSET_COLUMNS,
        "crossholdings": CROSSHOLDING_COLUMNS,
        "holdings": HOLDING_COLUMNS,
    }
    frames = {kind: _read_table(path, columns[kind]) for kind, path in paths.items()}
    snapshot = snapshot_from_frames(
        frames["funds"],
        frames["assets"],
        frames["crossholdings"],
        frames["holdings"],
        date=date,
        metadata=metadata,
        sources={kind: str(path) for kind, path in paths.items()},
    )
    logger.info(
        f"Loaded snapshot {date or paths['funds'].parent.name!r}: "
        f"{snapshot.n_funds} funds, {snapshot.n_assets} assets"
    )
    return snapshot


def load_bundle(directory: PathLike) -> MarketSnapshot:
    """Load a bundle directory; the date comes from the manifest or the directory name."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"Snapshot bundle not found: {directory}")

    date = directory.name
    metadata: Dict[str, Any] = {}
    manifest_path = directory / MANIFEST_FILE
    if manifest_path.exists():
        try:
            manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ParseError(str(manifest_path), e.lineno, None, e.msg) from e
        date = str(manifest.get("date", date))
        metadata = dict(manifest.get("metadata", {}))

    return load_snapshot(
        directory / FUNDS_FILE,
        directory / ASSETS_FILE,
        directory / CROSSHOLDINGS_FILE,
        directory / HOLDINGS_FILE,
        date=date,
        metadata=metadata,
    )


def _write_csv(frame: pd.DataFrame, path: Path) -> None:
    frame.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")


def manifest_dict(snapshot: MarketSnapshot) -> Dict[str, Any]:
    return {
        "date": snapshot.date,
        "summary": snapshot.summary(),
        "metadata": snapshot.metadata,
    }


def save_snapshot(
    snapshot: MarketSnapshot, directory: PathLike, force: bool = False
) -> Path:
    """
    Write the four CSVs and ``manifest.json`` into ``directory``.

    Rows are written in canonical order (funds and assets in symbol-table
    order, edges sorted by index pair) so that saving a loaded bundle
    reproduces it byte for byte.

    Raises:
        FileExistsError: bundle files exist and ``force`` is not set
    """
    directory = Path(directory)
    existing = [name for name in (*BUNDLE_FILES, MANIFEST_FILE) if (directory / name).exists()]
    if existing and not force:
        raise FileExistsError(
            f"{directory} already holds {', '.join(existing)}; use force to overwrite"
        )
    directory.mkdir(parents=True, exist_ok=True)

    _write_csv(snapshot.funds_frame(), directory / FUNDS_FILE)
    _write_csv(snapshot.assets_frame(), directory / ASSETS_FILE)
    _write_csv(snapshot.crossholdings_frame(), directory / CROSSHOLDINGS_FILE)
    _write_csv(snapshot.holdings_frame(), directory / HOLDINGS_FILE)
    (directory / MANIFEST_FILE).write_text(
        json.dumps(manifest_dict(snapshot), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )

    logger.info(f"Saved snapshot {snapshot.date!r} to {directory}")
    return directory


def snapshot_to_dict(snapshot: MarketSnapshot) -> Dict[str, Any]:
    """Plain-data form of a snapshot, table by table."""
    return {
        "date": snapshot.date,
        "metadata": snapshot.metadata,
        "funds": snapshot.funds_frame().to_dict(orient="records"),
        "assets": snapshot.assets_frame().to_dict(orient="records"),
        "crossholdings": snapshot.crossholdings_frame().to_dict(orient="records"),
        "holdings": snapshot.holdings_frame().to_dict(orient="records"),
    }


def snapshot_from_dict(data: Dict[str, Any]) -> MarketSnapshot:
    """Rebuild a snapshot from :func:`snapshot_to_dict` output, with full validation."""
    def frame(key: str, columns: List[str]) -> pd.DataFrame:
        return pd.DataFrame(list(data.get(key, [])), columns=columns)

    funds = frame("funds", FUND_COLUMNS)
    funds["open_ended"] = funds["open_ended"].astype(int).astype(str)
    return snapshot_from_frames(
        funds,
        frame("assets", ASSET_COLUMNS),
        frame("crossholdings", CROSSHOLDING_COLUMNS),
        frame("holdings", HOLDING_COLUMNS),
        date=str(data.get("date", "")),
        metadata=data.get("metadata"),
        sources={k: f"<json:{k}>" for k in ("funds", "assets", "crossholdings", "holdings")},
    )


def snapshot_to_json(snapshot: MarketSnapshot) -> str:
    return json.dumps(snapshot_to_dict(snapshot), sort_keys=True)


def snapshot_from_json(text: str) -> MarketSnapshot:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError("<json>", e.lineno, None, e.msg) from e
    return snapshot_from_dict(data)


def load_series(directories: Sequence[PathLike]) -> List[MarketSnapshot]:
    """Load time-ordered bundles and check their symbols agree (see :func:`check_symbols`)."""
    from src.core.ingest.series import check_symbols

    snapshots = [load_bundle(d) for d in directories]
    check_symbols(snapshots)
    return snapshots
