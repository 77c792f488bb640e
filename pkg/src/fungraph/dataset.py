"""Multivariate functional data on a common grid, plus file readers/writers.

Two on-disk formats are supported:

* long-format CSV with header ``subject,variable,t,value`` where subject,
  variable and t are 1-based integer indices;
* a binary layout: magic ``FGD1``, then n, p, T as little-endian 64-bit
  unsigned integers, then the n*p*T values as little-endian float64 in
  row-major (subject, variable, t) order.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, DimensionMismatch

_MAGIC = b"FGD1"


@dataclass(frozen=True)
class FunctionalDataset:
    """n subjects x p variables x T grid points of observed curves.

    ``values[i, j, t]`` is the curve of variable j for subject i evaluated
    at ``grid[t]``. The grid defaults to 1..T and must be strictly
    increasing.
    """

    values: np.ndarray
    grid: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 3:
            raise DimensionMismatch(f"values must be 3-d (n,p,T), got shape {values.shape}")
        n, p, T = values.shape
        if T < 2 or p < 2 or n < 1:
            raise DataError(f"need n>=1, p>=2, T>=2, got n={n}, p={p}, T={T}")
        if not np.all(np.isfinite(values)):
            raise DataError("values contain non-finite entries")
        grid = self.grid
        if grid is None:
            grid = np.arange(1.0, T + 1.0)
        grid = np.asarray(grid, dtype=float)
        if grid.shape != (T,):
            raise DimensionMismatch(f"grid length {grid.shape} does not match T={T}")
        if np.any(np.diff(grid) <= 0):
            raise DataError("grid positions must be strictly increasing")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "grid", grid)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    @property
    def T(self) -> int:
        return self.values.shape[2]


def read_dataset(path) -> FunctionalDataset:
    """Read a dataset from ``path``, sniffing binary vs long-format CSV."""
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == _MAGIC:
        return read_binary(path)
    return read_long_csv(path)


def read_long_csv(path) -> FunctionalDataset:
    """Read long-format CSV with header ``subject,variable,t,value``."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["subject", "variable", "t", "value"]:
            raise DataError(f"{path}: expected header 'subject,variable,t,value', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append((int(row[0]), int(row[1]), int(row[2]), float(row[3])))
            except (ValueError, IndexError) as exc:
                raise DataError(f"{path}:{lineno}: bad row {row!r}") from exc
    if not rows:
        raise DataError(f"{path}: no data rows")
    arr = np.array(rows)
    n = int(arr[:, 0].max())
    p = int(arr[:, 1].max())
    T = int(arr[:, 2].max())
    if arr[:, 0].min() < 1 or arr[:, 1].min() < 1 or arr[:, 2].min() < 1:
        raise DataError(f"{path}: indices must be 1-based")
    if len(rows) != n * p * T:
        raise DataError(f"{path}: expected {n * p * T} rows for n={n}, p={p}, T={T}, got {len(rows)}")
    values = np.full((n, p, T), np.nan)
    values[arr[:, 0].astype(int) - 1, arr[:, 1].astype(int) - 1, arr[:, 2].astype(int) - 1] = arr[:, 3]
    if np.any(np.isnan(values)):
        raise DataError(f"{path}: duplicate or missing (subject,variable,t) cells")
    return FunctionalDataset(values)


def write_long_csv(data: FunctionalDataset, path) -> None:
    """Write the long-format CSV (LF line endings, '.' decimal separator)."""
    with open(path, "w", newline="\n") as fh:
        fh.write("subject,variable,t,value\n")
        for i in range(data.n):
            for j in range(data.p):
                for t in range(data.T):
                    fh.write(f"{i + 1},{j + 1},{t + 1},{float(data.values[i, j, t])!r}\n")


def read_binary(path) -> FunctionalDataset:
    """Read the FGD1 binary layout."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise DataError(f"{path}: bad magic {magic!r}")
        dims = np.fromfile(fh, dtype="<u8", count=3)
        if dims.size != 3:
            raise DataError(f"{path}: truncated header")
        n, p, T = (int(d) for d in dims)
        values = np.fromfile(fh, dtype="<f8", count=n * p * T)
    if values.size != n * p * T:
        raise DataError(f"{path}: expected {n * p * T} values, got {values.size}")
    return FunctionalDataset(values.reshape(n, p, T))


def write_binary(data: FunctionalDataset, path) -> None:
    """Write the FGD1 binary layout."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        np.array([data.n, data.p, data.T], dtype="<u8").tofile(fh)
        np.ascontiguousarray(data.values, dtype="<f8").tofile(fh)
