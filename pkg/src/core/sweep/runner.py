"""Parameter-grid cascade experiments."""

import itertools
import json
import multiprocessing
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from src.config import settings
from src.core.contagion import CascadeContext, ScenarioConfig, run_cascade
from src.core.exceptions import FundNetError, SweepError
from src.core.ingest.snapshot import MarketSnapshot
from src.utils import get_logger

logger = get_logger(__name__)

PARAMETERS = ("eta", "crit_rate", "beta_rate", "omega")
SWEEP_COLUMNS = [
    *PARAMETERS,
    "initial_failures",
    "final_failures",
    "iterations",
    "total_value_lost",
    "error",
]
COUNT_COLUMNS = ("initial_failures", "final_failures", "iterations")

GridPoint = Tuple[float, float, float, float]


def axis(low: float, high: float, points: Optional[int] = None) -> List[float]:
    """Evenly spaced axis values, ``settings.sweep_grid_points`` by default."""
    points = points or settings.sweep_grid_points
    return [float(x) for x in np.linspace(low, high, points)]


class SweepSpec(BaseModel):
    """A grid over scenario rates; lists left unset hold the base value."""

    base: ScenarioConfig
    eta_values: Optional[List[float]] = None
    crit_values: Optional[List[float]] = None
    beta_values: Optional[List[float]] = None
    omega_values: Optional[List[float]] = None
    jobs: int = Field(default_factory=lambda: settings.sweep_jobs, ge=1)
    snapshot_ref: str = ""
    seed: Optional[int] = None

    @field_validator("eta_values", "crit_values", "beta_values", "omega_values")
    @classmethod
    def validate_values(cls, v: Optional[List[float]]) -> Optional[List[float]]:
        if v is not None and not v:
            raise ValueError("value lists must not be empty")
        return v

    @model_validator(mode="after")
    def fill_and_check(self) -> "SweepSpec":
        ranges = {
            "eta_values": ("eta", lambda x: 0.0 <= x < 1.0, "[0, 1)"),
            "crit_values": ("crit_rate", lambda x: 0.0 < x < 1.0, "(0, 1)"),
            "beta_values": ("beta_rate", lambda x: 0.0 <= x <= 1.0, "[0, 1]"),
            "omega_values": ("omega", lambda x: 0.0 <= x <= 1.0, "[0, 1]"),
        }
        for name, (parameter, legal, label) in ranges.items():
            values = getattr(self, name)
            if values is None:
                values = [getattr(self.base, parameter)]
                setattr(self, name, values)
            bad = [x for x in values if not legal(x)]
            if bad:
                raise ValueError(f"{parameter} values {bad} outside {label}")
        return self

    @property
    def grid_size(self) -> int:
        return (
            len(self.eta_values)
            * len(self.crit_values)
            * len(self.beta_values)
            * len(self.omega_values)
        )

    def grid(self) -> List[GridPoint]:
        """Points in lexicographic (eta, crit_rate, beta_rate, omega) list order."""
        return list(
            itertools.product(
                self.eta_values, self.crit_values, self.beta_values, self.omega_values
            )
        )


@dataclass
class SweepRow:
    eta: float
    crit_rate: float
    beta_rate: float
    omega: float
    initial_failures: Optional[int] = None
    final_failures: Optional[int] = None
    iterations: Optional[int] = None
    total_value_lost: Optional[float] = None
    error: str = ""

    @property
    def point(self) -> GridPoint:
        return (self.eta, self.crit_rate, self.beta_rate, self.omega)

    @property
    def failed(self) -> bool:
        return bool(self.error)


@dataclass
class SweepResult:
    spec: SweepSpec
    rows: List[SweepRow] = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def errors(self) -> int:
        return sum(1 for r in self.rows if r.failed)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame([asdict(r) for r in self.rows], columns=SWEEP_COLUMNS)
        for column in COUNT_COLUMNS:
            frame[column] = frame[column].astype("Int64")
        frame["total_value_lost"] = frame["total_value_lost"].astype(float)
        return frame

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        self.to_frame().to_csv(path, index=False, lineterminator="\n")
        return path

    def manifest(self) -> Dict[str, Any]:
        return {
            "spec": self.spec.model_dump(mode="json"),
            "grid_size": self.spec.grid_size,
            "rows": len(self.rows),
            "errors": self.errors,
            "seed": self.spec.seed,
            "snapshot": self.spec.snapshot_ref,
            "elapsed_seconds": round(self.elapsed, 3),
        }

    def write_manifest(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.manifest(), indent=2) + "\n", encoding="utf-8")
        return path


def run_point(ctx: CascadeContext, base: ScenarioConfig, point: GridPoint) -> SweepRow:
    """One grid point; errors become a marked row."""
    eta, crit_rate, beta_rate, omega = point
    row = SweepRow(eta=eta, crit_rate=crit_rate, beta_rate=beta_rate, omega=omega)
    try:
        config = base.with_updates(eta=eta, crit_rate=crit_rate, beta_rate=beta_rate, omega=omega)
        result = run_cascade(ctx.snapshot, config, ctx=ctx, record=False)
    except (FundNetError, ValidationError) as e:
        row.error = f"{type(e).__name__}: {e}".replace("\n", " ")
        return row

    row.initial_failures = result.initial_failures
    row.final_failures = result.final_failures
    row.iterations = result.iterations
    row.total_value_lost = result.total_value_lost
    return row


# Worker state for process pools: the factored matrix is rebuilt per worker
_worker_context: Optional[CascadeContext] = None


def _init_worker(snapshot: MarketSnapshot) -> None:
    global _worker_context
    _worker_context = CascadeContext(snapshot)


def _worker_point(task: Tuple[ScenarioConfig, GridPoint]) -> SweepRow:
    base, point = task
    return run_point(_worker_context, base, point)


def run_sweep(
    snapshot: MarketSnapshot,
    spec: SweepSpec,
    progress: Optional[Callable[[int, int], None]] = None,
) -> SweepResult:
    """
    Run every grid point of ``spec`` on one shared snapshot.

    Rows come back in grid order whatever ``spec.jobs`` is, and each equals
    an independent :func:`run_cascade` call with the same rates.

    Raises:
        UnknownAsset: the base scenario shocks an asset the snapshot lacks
    """
    started = time.perf_counter()
    points = spec.grid()
    ctx = CascadeContext(snapshot)
    ctx.shocked_prices(spec.base)

    logger.info(f"Sweep of {len(points)} points with {spec.jobs} job(s)")
    rows: List[SweepRow] = []
    if spec.jobs == 1 or len(points) == 1:
        for k, point in enumerate(points, start=1):
            rows.append(run_point(ctx, spec.base, point))
            if progress:
                progress(k, len(points))
    else:
        chunksize = max(1, len(points) // (spec.jobs * 4))
        with ProcessPoolExecutor(
            max_workers=spec.jobs,
            mp_context=multiprocessing.get_context("spawn"),
            initializer=_init_worker,
            initargs=(snapshot,),
        ) as pool:
            tasks = [(spec.base, point) for point in points]
            for k, row in enumerate(pool.map(_worker_point, tasks, chunksize=chunksize), start=1):
                rows.append(row)
                if progress:
                    progress(k, len(points))

    result = SweepResult(spec=spec, rows=rows, elapsed=time.perf_counter() - started)
    if result.errors:
        logger.warning(f"{result.errors} of {len(rows)} grid points failed")
    logger.info(f"Sweep finished in {result.elapsed:.2f}s")
    return result


def spot_check(
    snapshot: MarketSnapshot,
    result: SweepResult,
    count: int = 10,
    seed: int = 0,
) -> List[GridPoint]:
    """
    Re-run ``count`` random rows as independent cascades and compare.

    Raises:
        SweepError: a row differs from its independent run
    """
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(result.rows), size=min(count, len(result.rows)), replace=False)
    checked = []
    for k in sorted(int(p) for p in picks):
        row = result.rows[k]
        if row.failed:
            continue
        config = result.spec.base.with_updates(
            eta=row.eta, crit_rate=row.crit_rate, beta_rate=row.beta_rate, omega=row.omega
        )
        single = run_cascade(snapshot, config, record=False)
        expected = (single.initial_failures, single.final_failures, single.iterations)
        if (row.initial_failures, row.final_failures, row.iterations) != expected:
            raise SweepError(f"Row {k} at {row.point} differs from its independent run")
        checked.append(row.point)
    return checked


def parse_values(text: str) -> List[float]:
    """Comma-separated floats, as given on the command line."""
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as e:
        raise SweepError(f"Invalid value list '{text}': {e}") from e


def summary_table(result: SweepResult) -> Dict[str, Any]:
    frame = result.to_frame()
    ok = frame[frame["error"] == ""]
    return {
        "points": len(frame),
        "errors": result.errors,
        "max_final_failures": int(ok["final_failures"].max()) if len(ok) else 0,
        "max_iterations": int(ok["iterations"].max()) if len(ok) else 0,
    }
