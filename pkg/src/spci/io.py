"""
CSV ingestion and dumping.

Files carry a header row and one row per time step, oldest first. One
numeric column is the target; other named columns may serve as exogenous
features. Lagged targets are appended by :func:`dataset_from_columns`.
Missing or non-numeric cells are rejected with their line number; nothing
is imputed.

Floats are written with ``repr``, the shortest string that parses back to
the same double, so dump then load is lossless.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .core import TimeSeriesDataset, build_autoregressive_features
from .errors import DataLoadError

__all__ = ["read_columns", "write_columns", "load_dataset", "dataset_from_columns", "format_float"]

Column = Union[str, int]


def format_float(v: float) -> str:
    return repr(float(v))


def _format(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format_float(v)
    return "" if v is None else str(v)


def write_columns(path, columns: Mapping[str, Sequence]) -> Path:
    """Write equal-length columns under their names (header first)."""
    path = Path(path)
    names = list(columns)
    lengths = {len(columns[c]) for c in names}
    if len(lengths) > 1:
        raise ValueError(f"columns differ in length: {sorted(lengths)}")
    n = lengths.pop() if lengths else 0
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for i in range(n):
            writer.writerow([_format(columns[c][i]) for c in names])
    return path


def read_columns(path, columns: Optional[Sequence[Column]] = None) -> dict[str, np.ndarray]:
    """
    Read numeric columns from a headed CSV.

    ``columns`` selects by header name or 0-based position (default: all).
    Empty, ``nan``, or unparsable cells raise :class:`DataLoadError` naming
    the file line (the header is line 1).
    """
    path = Path(path)
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise DataLoadError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataLoadError(f"{path} is empty; a header row is required") from None
        if len(set(header)) != len(header):
            raise DataLoadError(f"{path}: duplicate column names in header")
        wanted = list(range(len(header))) if columns is None else [_resolve(c, header, path) for c in columns]
        data: list[list[float]] = [[] for _ in wanted]
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise DataLoadError(f"{path} line {line_no}: expected {len(header)} fields, got {len(row)}")
            for slot, j in enumerate(wanted):
                data[slot].append(_parse(row[j], header[j], line_no, path))
    if not data or not data[0]:
        raise DataLoadError(f"{path} has no data rows")
    return {header[j]: np.asarray(col, dtype=float) for j, col in zip(wanted, data)}


def _resolve(col: Column, header: list[str], path: Path) -> int:
    if isinstance(col, (int, np.integer)) or (isinstance(col, str) and col.lstrip("-").isdigit() and col not in header):
        j = int(col)
        if not 0 <= j < len(header):
            raise DataLoadError(f"{path}: column index {j} out of range (0..{len(header) - 1})")
        return j
    if col not in header:
        raise DataLoadError(f"{path}: no column named {col!r} (have {header})")
    return header.index(col)


def _parse(cell: str, name: str, line_no: int, path: Path) -> float:
    text = cell.strip()
    if not text:
        raise DataLoadError(f"{path} line {line_no}: missing value in column {name!r}")
    try:
        v = float(text)
    except ValueError:
        raise DataLoadError(f"{path} line {line_no}: non-numeric value {text!r} in column {name!r}") from None
    if not math.isfinite(v):
        raise DataLoadError(f"{path} line {line_no}: non-finite value {text!r} in column {name!r}")
    return v


def dataset_from_columns(
    target: np.ndarray,
    lags: int,
    exog: Optional[Mapping[str, np.ndarray]] = None,
    train_fraction: float = 0.8,
) -> TimeSeriesDataset:
    """Exogenous columns (same-time values) followed by ``lags`` lagged targets."""
    E = None
    names: tuple[str, ...] = ()
    if exog:
        names = tuple(exog)
        E = np.column_stack([np.asarray(exog[k], dtype=float) for k in names])
    data = build_autoregressive_features(target, lags, exog=E, exog_names=names)
    return data.with_train_fraction(train_fraction)


def load_dataset(
    path,
    target: Column,
    exog: Sequence[Column] = (),
    lags: int = 20,
    train_fraction: float = 0.8,
) -> TimeSeriesDataset:
    """Load a CSV into a dataset; see :func:`dataset_from_columns` for the layout."""
    cols = read_columns(path, [target, *exog])
    names = list(cols)
    if len(names) != 1 + len(exog):
        raise DataLoadError(f"{path}: target and exogenous columns must be distinct")
    y = cols[names[0]]
    ex = {k: cols[k] for k in names[1:]}
    return dataset_from_columns(y, lags, ex, train_fraction)
