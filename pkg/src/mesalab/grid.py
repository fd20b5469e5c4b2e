"""Uniform 1D cell grids, cell-averaged fields and windowed integral norms."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError


@dataclass(frozen=True)
class Grid1D:
    """Uniform partition of ``[xmin, xmax]`` into ``n`` cells.

    Cell ``i`` has center ``xmin + (i + 1/2) dx``.
    """

    xmin: float
    xmax: float
    n: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.xmin) and math.isfinite(self.xmax)):
            raise ConfigError("grid bounds (xmin, xmax) must be finite")
        if self.xmax <= self.xmin:
            raise ConfigError(f"xmax ≤ xmin (xmin={self.xmin}, xmax={self.xmax})")
        if int(self.n) != self.n or self.n < 4:
            raise ConfigError(f"n must be an integer ≥ 4, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def dx(self) -> float:
        return (self.xmax - self.xmin) / self.n

    @property
    def centers(self) -> np.ndarray:
        return self.xmin + (np.arange(self.n) + 0.5) * self.dx

    @property
    def edges(self) -> np.ndarray:
        return self.xmin + np.arange(self.n + 1) * self.dx

    def zeros(self) -> "Field":
        return Field(self, np.zeros(self.n))


def make_grid(xmin: float, xmax: float, n: int) -> Grid1D:
    return Grid1D(float(xmin), float(xmax), n)


@dataclass(frozen=True)
class Field:
    """Cell averages on a grid. The value array is read-only after construction."""

    grid: Grid1D
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=np.float64, copy=True)
        if vals.shape != (self.grid.n,):
            raise ConfigError(
                f"field length {vals.shape} does not match grid.n={self.grid.n}"
            )
        if not np.all(np.isfinite(vals)):
            raise DomainError("field entries must be finite")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def __add__(self, other: "Field") -> "Field":
        _same_grid(self, other)
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        _same_grid(self, other)
        return Field(self.grid, self.values - other.values)

    def with_values(self, values) -> "Field":
        return Field(self.grid, values)

    def is_nonnegative(self) -> bool:
        return bool(np.all(self.values >= 0.0))


def _same_grid(a: Field, b: Field) -> None:
    if a.grid != b.grid:
        raise DomainError("fields live on different grids")


def window_mask(grid: Grid1D, a: float, b: float) -> np.ndarray:
    """Boolean mask of cells whose centers lie in ``[a, b]``."""
    if not a < b:
        raise DomainError(f"window requires a < b, got ({a}, {b})")
    if a < grid.xmin or b > grid.xmax:
        raise DomainError(
            f"window ({a}, {b}) is outside the domain ({grid.xmin}, {grid.xmax})"
        )
    x = grid.centers
    return (x >= a) & (x <= b)


def l1_window(f: Field, a: float, b: float) -> float:
    mask = window_mask(f.grid, a, b)
    return math.fsum(np.abs(f.values[mask])) * f.grid.dx


def total_mass(f: Field) -> float:
    # fsum is exactly rounded, so the result does not depend on chunking.
    return math.fsum(np.abs(f.values)) * f.grid.dx


def linf(f: Field) -> float:
    return float(np.max(np.abs(f.values)))


def l1_distance(f: Field, g: Field, window: tuple[float, float] | None = None) -> float:
    """L1 norm of ``f - g``, optionally restricted to a window."""
    diff = f - g
    if window is None:
        return total_mass(diff)
    return l1_window(diff, *window)
