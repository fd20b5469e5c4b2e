"""Explicit vanishing-viscosity solver for ``u_t + (u^m)_x = eps u_xx - u^p``.

Used only as an oracle against the hyperbolic solver, so it is plain numpy
with an explicit step restricted by both the advective and diffusive bounds.
"""
from __future__ import annotations

import math

import numpy as np

from . import _pykernels
from .errors import CFLViolation, ConfigError, NumericalError
from .grid import Field
from .model import ModelParams
from .solver import RunConfig, RunResult

SAFETY = 0.45
BOUNDARIES = ("zero_inflow", "copy")


def stable_dt(f: Field, eps: float, m: float) -> float:
    dx = f.grid.dx
    speed = max(_pykernels.max_speed(f.values, m), _pykernels.TINY_SPEED)
    return SAFETY * min(dx / speed, dx * dx / (2.0 * eps))


def _ghosts(u: np.ndarray, boundary: str) -> tuple[float, float]:
    left = 0.0 if boundary == "zero_inflow" else u[0]
    return left, u[-1]


def viscous_step(f: Field, dt: float, eps: float, params: ModelParams,
                 boundary: str = "zero_inflow") -> Field:
    """Upwind transport plus centered diffusion, then one exact absorption step.

    ``boundary="copy"`` copies the edge cells into both ghosts, which keeps a
    spatially constant state exactly constant.
    """
    if not eps > 0:
        raise ConfigError(f"epsilon must be > 0, got {eps}")
    if boundary not in BOUNDARIES:
        raise ConfigError(f"boundary must be one of {BOUNDARIES}")
    u = f.values
    dx = f.grid.dx
    if dt > stable_dt(f, eps, params.m) * (1.0 + 1e-12):
        raise CFLViolation(f"dt={dt:.3g} exceeds the advective-diffusive stability bound")
    gl, gr = _ghosts(u, boundary)
    ext = np.concatenate(([gl], u, [gr]))
    F = _pykernels.power(ext[:-1], params.m)  # upwind flux on faces -1/2 .. n-1/2
    lap = ext[2:] - 2.0 * ext[1:-1] + ext[:-2]
    new = u - (dt / dx) * (F[1:] - F[:-1]) + (eps * dt / (dx * dx)) * lap
    if not np.all(np.isfinite(new)):
        raise NumericalError("viscous step produced non-finite values")
    if np.any(new < -_pykernels.CLAMP * max(1.0, float(u.max()))):
        raise NumericalError("viscous step lost nonnegativity")
    np.clip(new, 0.0, None, out=new)
    if params.absorption_enabled:
        new = _pykernels.absorb_array(new, params.p, dt)
    return Field(f.grid, new)


def run_viscous(config: RunConfig, boundary: str = "zero_inflow",
                max_steps: int = 50_000_000) -> RunResult:
    """March with :func:`viscous_step`; snapshots land exactly on requested times."""
    if config.epsilon is None:
        raise ConfigError("run_viscous needs config.epsilon")
    eps = config.epsilon
    grid, params = config.grid, config.params
    u = config.initial_field()
    initial = u
    psi = np.zeros(grid.n)
    snapshots, psi_at, absorbed_at, outflow_at = {}, {}, {}, {}
    absorbed = outflow = 0.0
    dts = []
    t = 0.0
    for ts in config.output_times:
        while t < ts:
            if len(dts) >= max_steps:
                raise NumericalError(f"step limit {max_steps} reached at t={t:.6g}")
            dt = stable_dt(u, eps, params.m)
            last = t + dt >= ts
            if last:
                dt = ts - t
            psi += _pykernels.power(u.values, params.m) * dt
            before = u.values
            new = viscous_step(u, dt, eps, params, boundary)
            # boundary fluxes of the same update, for the mass ledger
            gl, gr = _ghosts(before, boundary)
            f_right = _pykernels.power(before[-1:], params.m)[0]
            f_left = _pykernels.power(np.array([gl]), params.m)[0]
            d_right = eps * (gr - before[-1]) / grid.dx
            d_left = eps * (before[0] - gl) / grid.dx
            flux_out = (f_right - d_right) - (f_left - d_left)
            outflow += flux_out * dt
            absorbed += (math.fsum(before) * grid.dx - flux_out * dt
                         - math.fsum(new.values) * grid.dx)
            u = new
            dts.append(dt)
            t = ts if last else t + dt
        snapshots[ts] = u
        psi_at[ts] = Field(grid, psi)
        absorbed_at[ts] = absorbed
        outflow_at[ts] = outflow
    return RunResult(
        config=config,
        initial=initial,
        snapshots=snapshots,
        psi_at=psi_at,
        absorbed_at=absorbed_at,
        outflow_at=outflow_at,
        step_count=len(dts),
        dt_history=np.array(dts),
        backend="python",
    )
