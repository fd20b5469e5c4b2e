"""Initial-data catalog and field CSV serialization."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .errors import ConfigError, DomainError, ParseError
from .grid import Field, Grid1D


@dataclass(frozen=True)
class Box:
    height: float
    a: float
    b: float

    def __post_init__(self):
        if not self.height >= 0:
            raise ConfigError(f"box height must be ≥ 0, got {self.height}")
        if not self.a < self.b:
            raise ConfigError(f"box requires a < b, got ({self.a}, {self.b})")


@dataclass(frozen=True)
class MultiBox:
    boxes: tuple[Box, ...]

    def __post_init__(self):
        if not self.boxes:
            raise ConfigError("multibox needs at least one box")


@dataclass(frozen=True)
class Bump:
    """``height * exp(1 - 1/(1 - r^2))`` for ``r = (x - center)/width`` in (-1, 1)."""

    height: float
    center: float
    width: float

    def __post_init__(self):
        if not self.height >= 0:
            raise ConfigError(f"bump height must be ≥ 0, got {self.height}")
        if not self.width > 0:
            raise ConfigError(f"bump width must be > 0, got {self.width}")


@dataclass(frozen=True)
class Samples:
    path: str


InitialSpec = Union[Box, MultiBox, Bump, Samples]


def _check_support(grid: Grid1D, a: float, b: float) -> None:
    if a < grid.xmin or b > grid.xmax:
        raise DomainError(
            f"initial support ({a}, {b}) lies outside the grid ({grid.xmin}, {grid.xmax})"
        )


def _box_values(grid: Grid1D, box: Box) -> np.ndarray:
    _check_support(grid, box.a, box.b)
    e = grid.edges
    overlap = np.clip(np.minimum(e[1:], box.b) - np.maximum(e[:-1], box.a), 0.0, None)
    return box.height * np.minimum(overlap / grid.dx, 1.0)


def _bump_values(grid: Grid1D, bump: Bump) -> np.ndarray:
    _check_support(grid, bump.center - bump.width, bump.center + bump.width)
    nodes, weights = np.polynomial.legendre.leggauss(5)
    e = grid.edges
    mid = 0.5 * (e[1:] + e[:-1])
    x = mid[:, None] + 0.5 * grid.dx * nodes[None, :]
    r2 = ((x - bump.center) / bump.width) ** 2
    inside = r2 < 1.0
    vals = np.zeros_like(x)
    vals[inside] = bump.height * np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
    # weights sum to 2 on [-1, 1]
    return 0.5 * vals @ weights


def _sample_values(grid: Grid1D, spec: Samples) -> np.ndarray:
    x, u = read_samples_csv(spec.path)
    if np.any(x < grid.xmin) or np.any(x > grid.xmax):
        raise DomainError("sample locations lie outside the grid")
    idx = np.clip(np.floor((x - grid.xmin) / grid.dx).astype(int), 0, grid.n - 1)
    total = np.bincount(idx, weights=u, minlength=grid.n)
    count = np.bincount(idx, minlength=grid.n)
    out = np.zeros(grid.n)
    hit = count > 0
    out[hit] = total[hit] / count[hit]
    return out


def realize(spec: InitialSpec | Field, grid: Grid1D) -> Field:
    """Cell averages of the initial datum on ``grid``."""
    if isinstance(spec, Field):
        if spec.grid != grid:
            raise ConfigError("initial field lives on a different grid")
        return spec
    if isinstance(spec, Box):
        vals = _box_values(grid, spec)
    elif isinstance(spec, MultiBox):
        vals = sum(_box_values(grid, b) for b in spec.boxes)
    elif isinstance(spec, Bump):
        vals = _bump_values(grid, spec)
    elif isinstance(spec, Samples):
        vals = _sample_values(grid, spec)
    else:
        raise ConfigError(f"unknown initial spec {spec!r}")
    if np.any(vals < 0):
        raise DomainError("initial data must be nonnegative")
    return Field(grid, vals)


def support_right_edge(spec: InitialSpec | Field, grid: Grid1D) -> float:
    """Rightmost point of the initial support (cell edge for sampled data)."""
    if isinstance(spec, Box):
        return spec.b
    if isinstance(spec, MultiBox):
        return max(b.b for b in spec.boxes)
    if isinstance(spec, Bump):
        return spec.center + spec.width
    f = realize(spec, grid)
    nz = np.nonzero(f.values)[0]
    return grid.xmin if nz.size == 0 else float(grid.edges[nz[-1] + 1])


def write_field_csv(field: Field, path) -> None:
    lines = ["x,u"]
    for x, u in zip(field.grid.centers, field.values):
        lines.append(f"{x:.17g},{u:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_samples_csv(path) -> tuple[np.ndarray, np.ndarray]:
    text = Path(path).read_text()
    if not text.strip():
        raise ParseError(f"{path}: empty file")
    rows = list(csv.reader(text.splitlines()))
    header = [h.strip() for h in rows[0]]
    if header != ["x", "u"]:
        raise ParseError(f"{path}: line 1: expected header 'x,u', got {','.join(rows[0])!r}")
    xs, us = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 2:
            raise ParseError(f"{path}: line {lineno}: expected 2 columns, got {len(row)}")
        try:
            x, u = float(row[0]), float(row[1])
        except ValueError:
            raise ParseError(f"{path}: line {lineno}: non-numeric entry {row!r}") from None
        if not (math.isfinite(x) and math.isfinite(u)):
            raise ParseError(f"{path}: line {lineno}: non-finite entry {row!r}")
        xs.append(x)
        us.append(u)
    if not xs:
        raise ParseError(f"{path}: no data rows")
    return np.array(xs), np.array(us)


def read_field_csv(path, grid: Grid1D | None = None) -> Field:
    """Read a field written by :func:`write_field_csv`.

    Without ``grid`` the grid is reconstructed from the (uniform) cell centers.
    """
    x, u = read_samples_csv(path)
    if grid is None:
        if x.size < 4:
            raise ParseError(f"{path}: need at least 4 rows to infer a grid")
        dx = (x[-1] - x[0]) / (x.size - 1)
        grid = Grid1D(float(x[0] - 0.5 * dx), float(x[-1] + 0.5 * dx), x.size)
        if not np.allclose(grid.centers, x, rtol=0, atol=1e-9 * max(1.0, abs(dx))):
            raise ParseError(f"{path}: cell centers are not uniformly spaced")
    elif x.size != grid.n:
        raise ParseError(f"{path}: {x.size} rows for a grid of {grid.n} cells")
    return Field(grid, u)
