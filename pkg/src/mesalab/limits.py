"""Limit objects of the singular limits m -> oo and p -> oo.

* ``mesa_project``: the m -> oo initial layer, a profile capped at 1 plus a
  nonnegative corrector ``psi`` with ``v + psi_x = u0`` and ``psi = 0``
  wherever ``v < 1``.
* ``truncate_at_one``: the p -> oo initial layer.
* ``ode_limit_solution``: the exact absorption flow applied cell-wise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError
from .grid import Field, total_mass
from .model import ModelParams
from .solver import RunConfig, RunResult, SchemeChoice, run
from . import _pykernels


@dataclass(frozen=True)
class MesaResult:
    v: Field
    psi: Field


def mesa_project(u0: Field) -> MesaResult:
    """One-sided mesa projection by a left-to-right running-supremum sweep.

    Excess mass above height 1 is carried to the right, matching the
    direction of the flux ``u^m``. ``psi[i]`` lives on the right face of cell
    ``i`` and ``v[i] = u0[i] - (psi[i] - psi[i-1]) / dx``.
    """
    if not u0.is_nonnegative():
        raise DomainError("mesa projection needs nonnegative data")
    dx = u0.grid.dx
    excess = (u0.values - 1.0) * dx
    psi = np.empty_like(excess)
    s = 0.0
    for i, e in enumerate(excess.tolist()):
        s = max(0.0, s + e)
        psi[i] = s
    if psi[-1] > 0.0:
        raise DomainError(
            f"domain too small for the mesa: {psi[-1]:.6g} units of mass would "
            "leave the right boundary; extend grid.xmax"
        )
    dpsi = np.diff(psi, prepend=0.0)
    v = u0.values - dpsi / dx
    np.clip(v, 0.0, None, out=v)
    return MesaResult(Field(u0.grid, v), Field(u0.grid, psi))


def truncate_at_one(u0: Field) -> Field:
    if not u0.is_nonnegative():
        raise DomainError("truncation needs nonnegative data")
    return Field(u0.grid, np.minimum(u0.values, 1.0))


def ode_limit_solution(v0: Field, p: float, t: float) -> Field:
    if not v0.is_nonnegative():
        raise DomainError("ODE limit needs nonnegative data")
    if t < 0:
        raise DomainError(f"t must be nonnegative, got {t}")
    if p <= 1:
        from .errors import ParameterError
        raise ParameterError(f"p must be > 1, got {p}")
    return Field(v0.grid, _pykernels.absorb_array(v0.values, p, t))


def predicted_m_limit(u0: Field, p: float, t: float) -> Field:
    return ode_limit_solution(mesa_project(u0).v, p, t)


def predicted_p_limit(u0: Field, m: float, snapshot_times: Sequence[float],
                      scheme: SchemeChoice = SchemeChoice(), **run_kwargs) -> RunResult:
    """Absorption-free run started from ``min(u0, 1)``."""
    times = tuple(sorted(float(t) for t in snapshot_times))
    if not times:
        raise DomainError("predicted_p_limit needs at least one time")
    config = RunConfig(
        grid=u0.grid,
        params=ModelParams(m, absorption_enabled=False),
        initial=truncate_at_one(u0),
        t_end=times[-1],
        snapshot_times=times,
        scheme=scheme,
    )
    return run(config, **run_kwargs)


def iterated_limits_gap(u0: Field, eval_times: Iterable[float] | None = None) -> float:
    """L1 distance between lim_p lim_m u and lim_m lim_p u.

    lim_p lim_m is the mesa profile of ``u0`` and lim_m lim_p the mesa profile
    of ``min(u0, 1)``. Both are stationary, so the distance is the same at
    every positive evaluation time.
    """
    if eval_times is not None and any(t <= 0 for t in eval_times):
        raise DomainError("evaluation times must be positive")
    a = mesa_project(u0).v
    b = mesa_project(truncate_at_one(u0)).v
    return total_mass(a - b)


def mesa_residual(u0: Field, res: MesaResult) -> float:
    """Max per-cell defect of ``v + (psi_i - psi_{i-1}) / dx = u0``."""
    dpsi = np.diff(res.psi.values, prepend=0.0) / u0.grid.dx
    return float(np.max(np.abs(res.v.values + dpsi - u0.values)))


def mass_defect(u0: Field, res: MesaResult) -> float:
    return abs(total_mass(res.v) - total_mass(u0))
