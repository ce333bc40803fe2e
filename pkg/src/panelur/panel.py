"""Core panel containers and the deterministic series transforms shared by all modules.

Panels are stored unit-major (one row per unit): every statistic downstream
iterates over units first, then time. All values are float64 and immutable
after construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, DimensionError

__all__ = ["Panel", "DiffPanel", "Series", "difference", "cumsum_matrix", "apply_cumsum"]


def _as_float_matrix(values, what: str) -> np.ndarray:
    arr = np.array(values, dtype=float)  # copy: the container freezes its buffer
    if arr.ndim != 2:
        raise DimensionError(f"{what} must be a 2-d array, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{what} contains non-finite entries")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Panel:
    """A balanced n x T panel of observations with unit and time labels."""

    values: np.ndarray
    unit_ids: tuple = field(default=None)  # type: ignore[assignment]
    time_ids: tuple = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        arr = _as_float_matrix(self.values, "panel values")
        n, t = arr.shape
        if n < 1 or t < 2:
            raise DimensionError(f"panel needs n >= 1 and T >= 2, got {n} x {t}")
        units = tuple(range(n)) if self.unit_ids is None else tuple(self.unit_ids)
        times = tuple(range(t)) if self.time_ids is None else tuple(self.time_ids)
        if len(units) != n:
            raise DimensionError(f"{len(units)} unit labels for {n} rows")
        if len(times) != t:
            raise DimensionError(f"{len(times)} time labels for {t} columns")
        if len(set(units)) != n:
            raise DataError("duplicate unit labels")
        if len(set(times)) != t:
            raise DataError("duplicate time labels")
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "unit_ids", units)
        object.__setattr__(self, "time_ids", times)

    @property
    def n_units(self) -> int:
        return self.values.shape[0]

    @property
    def n_periods(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class DiffPanel:
    """First differences of a Panel: n rows, T-1 columns."""

    values: np.ndarray

    def __post_init__(self):
        arr = _as_float_matrix(self.values, "difference values")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DimensionError(f"difference panel must be nonempty, got {arr.shape}")
        object.__setattr__(self, "values", arr)

    @property
    def n_units(self) -> int:
        return self.values.shape[0]

    @property
    def n_periods(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class Series:
    """A single observed time series."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=float)
        if arr.ndim != 1 or arr.size < 1:
            raise DimensionError("series must be 1-d and nonempty")
        if not np.all(np.isfinite(arr)):
            raise DataError("series contains non-finite entries")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    def __len__(self) -> int:
        return self.data.size


def difference(p: Panel) -> DiffPanel:
    """First-difference a panel along time: out[i, t] = p[i, t+1] - p[i, t]."""
    if p.n_periods < 2:
        raise DimensionError("differencing needs at least two periods")
    return DiffPanel(np.diff(p.values, axis=1))


def cumsum_matrix(t: int) -> np.ndarray:
    """The T x T strictly lower-triangular matrix of ones.

    Premultiplying a difference vector by it produces lagged partial sums
    (zero starting values). Satisfies A + A' = ones - I.
    """
    if t < 1:
        raise DimensionError("cumsum_matrix needs T >= 1")
    return np.tril(np.ones((t, t)), k=-1)


def apply_cumsum(d: DiffPanel) -> Panel:
    """Lagged cumulative sums per unit: out[i, t] = sum_{s < t} d[i, s].

    Column 1 of the output is zero; equivalent to right-multiplying by the
    transpose of cumsum_matrix(T).
    """
    vals = d.values
    out = np.empty_like(vals)
    out[:, 0] = 0.0
    np.cumsum(vals[:, :-1], axis=1, out=out[:, 1:])
    return Panel(out)
