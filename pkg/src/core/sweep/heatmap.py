"""Matrix (heatmap) views of a sweep: x values as columns, y values as rows."""

from pathlib import Path
from typing import List, Optional, Union

import pandas as pd

from src.core.exceptions import AmbiguousCell, SweepError, UnknownParameter
from src.core.sweep.runner import PARAMETERS, SweepResult

Z_COLUMNS = ("initial_failures", "final_failures", "iterations", "total_value_lost")


def _ordered(values: pd.Series) -> List[float]:
    return list(dict.fromkeys(values.tolist()))


def heatmap_frame(result: SweepResult, x_param: str, y_param: str, z_column: str) -> pd.DataFrame:
    """
    Rearrange one result column into a y-by-x matrix.

    Raises:
        UnknownParameter: x/y is not a scenario rate or z not a result column
        SweepError: x or y has fewer than two values
        AmbiguousCell: another parameter varies, so a cell holds several rows
    """
    for name in (x_param, y_param):
        if name not in PARAMETERS:
            raise UnknownParameter(name)
    if z_column not in Z_COLUMNS:
        raise UnknownParameter(z_column)
    if x_param == y_param:
        raise SweepError("heatmap axes must differ")

    frame = result.to_frame()
    xs, ys = _ordered(frame[x_param]), _ordered(frame[y_param])
    for name, values in ((x_param, xs), (y_param, ys)):
        if len(values) < 2:
            raise SweepError(f"{name} needs at least 2 values for a heatmap")

    counts = frame.groupby([y_param, x_param], sort=False).size()
    crowded = counts[counts > 1]
    if len(crowded):
        y, x = crowded.index[0]
        raise AmbiguousCell(x, y, int(crowded.iloc[0]))

    matrix = frame.pivot(index=y_param, columns=x_param, values=z_column)
    matrix = matrix.reindex(index=ys, columns=xs)
    matrix.index.name = f"{y_param}\\{x_param}"
    matrix.columns = [repr(float(x)) for x in xs]
    return matrix


def heatmap_export(
    result: SweepResult,
    x_param: str,
    y_param: str,
    z_column: str,
    directory: Optional[Union[str, Path]] = None,
) -> pd.DataFrame:
    """Heatmap frame, also written to ``<directory>/heatmap_<z>.csv`` when a directory is given."""
    matrix = heatmap_frame(result, x_param, y_param, z_column)
    if directory is not None:
        path = Path(directory) / f"heatmap_{z_column}.csv"
        matrix.to_csv(path, lineterminator="\n")
    return matrix
