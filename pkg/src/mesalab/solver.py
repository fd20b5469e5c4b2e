"""Monotone finite-volume solver with Strang splitting for the absorption term.

Transport uses a conservative first-order update (Godunov/upwind by default,
global Lax-Friedrichs as a cross-check); absorption is advanced with its
exact flow, so large ``p`` adds no stiffness. Each run also accumulates
``psi_m(x, t) = int_0^t u^m dtau`` and a mass ledger (absorbed, outflow).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _backend, _pykernels
from .data import InitialSpec, realize, support_right_edge
from .errors import CFLViolation, ConfigError, DomainError, NumericalError, UsageError
from .grid import Field, Grid1D, linf, total_mass
from .model import ModelParams, speed_bound

log = logging.getLogger(__name__)

SCHEMES = {"godunov_upwind": _pykernels.GODUNOV, "lax_friedrichs": _pykernels.LAX_FRIEDRICHS}
TINY_SPEED = _pykernels.TINY_SPEED
DEFAULT_MAX_STEPS = 20_000_000
_CHUNK = 65536


@dataclass(frozen=True)
class SchemeChoice:
    name: str = "godunov_upwind"
    cfl_number: float = 0.45

    def __post_init__(self):
        if self.name not in SCHEMES:
            raise ConfigError(f"scheme.name must be one of {sorted(SCHEMES)}, got {self.name!r}")
        if not 0.0 < self.cfl_number < 1.0:
            raise ConfigError(f"scheme.cfl must lie in (0, 1), got {self.cfl_number}")

    @property
    def code(self) -> int:
        return SCHEMES[self.name]


@dataclass(frozen=True)
class RunConfig:
    grid: Grid1D
    params: ModelParams
    initial: InitialSpec | Field
    t_end: float
    snapshot_times: tuple[float, ...] = ()
    scheme: SchemeChoice = SchemeChoice()
    epsilon: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.t_end) and self.t_end > 0):
            raise ConfigError(f"time.t_end must be > 0, got {self.t_end}")
        snaps = tuple(float(s) for s in self.snapshot_times)
        if list(snaps) != sorted(snaps):
            raise ConfigError("time.snapshots must be sorted")
        if any(s < 0 or s > self.t_end for s in snaps):
            raise ConfigError(f"time.snapshots must lie in [0, {self.t_end}]")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ConfigError(f"viscous.epsilon must be > 0, got {self.epsilon}")
        object.__setattr__(self, "snapshot_times", snaps)

    @property
    def output_times(self) -> tuple[float, ...]:
        return tuple(sorted(set(self.snapshot_times) | {self.t_end}))

    def initial_field(self) -> Field:
        return realize(self.initial, self.grid)

    def containment_warning(self) -> str | None:
        """Message when the domain is too short for finite-speed containment."""
        u0 = self.initial_field()
        reach = support_right_edge(self.initial, self.grid)
        reach += speed_bound(self.params.m, linf(u0)) * self.t_end + 10 * self.grid.dx
        if self.grid.xmax < reach:
            return (
                f"domain right edge {self.grid.xmax} is short of the finite-speed "
                f"reach {reach:.6g}; mass may leave through the outflow boundary"
            )
        return None


@dataclass
class Trace:
    """Every time level of a run, for the discrete entropy functional.

    ``levels[n]`` is the state at ``times[n]``; ``pre_transport[n]`` is the
    state transported during step ``n`` (after the first absorption half
    step); ``absorbed_first[n]`` and ``absorbed_second[n]`` are the per-cell
    decrements of the two absorption half steps.
    """

    times: np.ndarray
    levels: np.ndarray
    pre_transport: np.ndarray
    absorbed_first: np.ndarray
    absorbed_second: np.ndarray
    dts: np.ndarray


@dataclass
class RunResult:
    config: RunConfig
    initial: Field
    snapshots: dict[float, Field]
    psi_at: dict[float, Field]
    absorbed_at: dict[float, float]
    outflow_at: dict[float, float]
    step_count: int
    dt_history: np.ndarray
    backend: str
    warnings: list[str] = field(default_factory=list)
    trace: Trace | None = None

    @property
    def t_end(self) -> float:
        return self.config.t_end

    @property
    def final(self) -> Field:
        return self.snapshots[self.t_end]

    @property
    def psi(self) -> Field:
        return self.psi_at[self.t_end]

    @property
    def absorbed_mass(self) -> float:
        return self.absorbed_at[self.t_end]

    @property
    def outflow(self) -> float:
        return self.outflow_at[self.t_end]

    @property
    def times(self) -> list[float]:
        return sorted(self.snapshots)

    def ledger_defect(self, t: float) -> float:
        """Relative mismatch of mass(t) + absorbed + outflow against mass(0)."""
        m0 = total_mass(self.initial)
        lhs = math.fsum([total_mass(self.snapshots[t]), self.absorbed_at[t], self.outflow_at[t]])
        return abs(lhs - m0) / max(m0, 1e-300)


@dataclass
class StepLedger:
    """Accumulates boundary outflow and absorbed mass for direct step calls."""

    outflow: float = 0.0
    absorbed: float = 0.0


def _check_nonneg(u: float, name: str) -> None:
    if u < 0:
        raise DomainError(f"{name} must be nonnegative, got {u}")


def numerical_flux(uL: float, uR: float, m: float, scheme: SchemeChoice | str,
                   alpha: float = 0.0) -> float:
    _check_nonneg(uL, "uL")
    _check_nonneg(uR, "uR")
    name = scheme.name if isinstance(scheme, SchemeChoice) else scheme
    if name == "godunov_upwind":
        # u^m is nondecreasing on u >= 0: the Riemann fan never moves left.
        return uL**m
    if name == "lax_friedrichs":
        return 0.5 * (uL**m + uR**m) - 0.5 * alpha * (uR - uL)
    raise ConfigError(f"unknown scheme {name!r}")


def cfl_dt(f: Field, m: float, cfl: float, t: float | None = None,
           t_next: float | None = None) -> float:
    """Stable step ``cfl * dx / max speed``, optionally capped to land on ``t_next``."""
    speed = _pykernels.max_speed(f.values, m)
    dt = cfl * f.grid.dx / max(speed, TINY_SPEED)
    if t is not None and t_next is not None:
        dt = min(dt, t_next - t)
    return dt


def hyperbolic_substep(f: Field, dt: float, m: float, scheme: SchemeChoice = SchemeChoice(),
                       ledger: StepLedger | None = None) -> Field:
    """Conservative update with zero-inflow left ghost and copy-out right ghost."""
    new, outflow, status, idx = _pykernels.hyperbolic_update(
        f.values.copy(), dt, f.grid.dx, m, scheme.code
    )
    _raise_status(status, idx, step=None)
    if ledger is not None:
        ledger.outflow += outflow
    return Field(f.grid, new)


def step(f: Field, dt: float, params: ModelParams, scheme: SchemeChoice = SchemeChoice(),
         ledger: StepLedger | None = None) -> Field:
    """Strang step: half absorption, full transport, half absorption."""
    if not params.absorption_enabled:
        return hyperbolic_substep(f, dt, params.m, scheme, ledger)
    half = 0.5 * dt
    ut = _pykernels.absorb_array(f.values, params.p, half)
    inner = StepLedger()
    mid = hyperbolic_substep(Field(f.grid, ut), dt, params.m, scheme, inner)
    fin = _pykernels.absorb_array(mid.values, params.p, half)
    if ledger is not None:
        ledger.outflow += inner.outflow
        ledger.absorbed += float(np.sum((f.values - ut) + (mid.values - fin))) * f.grid.dx
    return Field(f.grid, fin)


def _raise_status(status: int, idx: int, step: int | None) -> None:
    where = "" if step is None else f" at step {step}"
    if status == _pykernels.CFL_FAIL:
        raise CFLViolation(f"time step violates the CFL bound{where}")
    if status == _pykernels.NONFINITE:
        raise NumericalError(f"numerical blow-up: non-finite value in cell {idx}{where}")
    if status == _pykernels.NEGATIVE:
        raise NumericalError(f"negative state beyond roundoff in cell {idx}{where}")


def run(config: RunConfig, *, dt_schedule: Sequence[float] | None = None,
        trace: bool = False, backend: str | None = None,
        max_steps: int = DEFAULT_MAX_STEPS) -> RunResult:
    """March the initial datum to ``config.t_end``.

    ``dt_schedule`` replays a recorded step sequence (each entry still capped
    at snapshot times) so that two runs can share identical time levels; the
    CFL bound is re-checked for every replayed step. ``trace=True`` keeps every
    time level and always uses the numpy kernel.
    """
    u0 = config.initial_field()
    if not u0.is_nonnegative():
        raise DomainError("initial data must be nonnegative")
    grid, params = config.grid, config.params
    name = "python" if trace else (backend or _backend.current())
    advance = _backend.get_advance(name)

    warnings = []
    msg = config.containment_warning()
    if msg:
        warnings.append(msg)
        log.info(msg)

    u = u0.values.copy()
    psi = np.zeros(grid.n)
    psi_c = np.zeros(grid.n)
    ledger = np.zeros(4)
    schedule = None if dt_schedule is None else np.ascontiguousarray(dt_schedule, dtype=np.float64)
    records: list | None = [] if trace else None

    snapshots, psi_at, absorbed_at, outflow_at = {}, {}, {}, {}
    dts: list[np.ndarray] = []
    t, nsteps = 0.0, 0
    for ts in config.output_times:
        while t < ts:
            cap = min(_CHUNK, max_steps - nsteps)
            if schedule is not None:
                cap = min(cap, schedule.size - nsteps)
                if cap <= 0:
                    raise UsageError("dt_schedule exhausted before reaching t_end")
            if cap <= 0:
                raise NumericalError(f"step limit {max_steps} reached at t={t:.6g}")
            buf = np.empty(cap)
            t, k, status, idx = advance(
                u, psi, psi_c, ledger, t, ts, grid.dx, params.m, params.p,
                params.absorption_enabled, config.scheme.code, config.scheme.cfl_number,
                buf, schedule, nsteps, records,
            )
            dts.append(buf[:k].copy())
            nsteps += k
            _raise_status(status, idx, nsteps)
        snapshots[ts] = Field(grid, u)
        psi_at[ts] = Field(grid, psi)
        absorbed_at[ts] = float(ledger[2] + ledger[3])
        outflow_at[ts] = float(ledger[0] + ledger[1])

    m0 = total_mass(u0)
    if m0 > 0 and outflow_at[config.t_end] > 0.01 * m0:
        msg = (f"{outflow_at[config.t_end] / m0:.2%} of the initial mass left through "
               "the right boundary; enlarge grid.xmax")
        warnings.append(msg)
        log.warning(msg)

    return RunResult(
        config=config,
        initial=u0,
        snapshots=snapshots,
        psi_at=psi_at,
        absorbed_at=absorbed_at,
        outflow_at=outflow_at,
        step_count=nsteps,
        dt_history=np.concatenate(dts) if dts else np.zeros(0),
        backend=name,
        warnings=warnings,
        trace=_build_trace(records, u, grid.n) if trace else None,
    )


def _build_trace(records, final, n) -> Trace:
    dts = np.array([r[2] for r in records])
    times = np.concatenate(([0.0], np.cumsum(dts)))
    levels = np.array([r[0] for r in records] + [final.copy()]).reshape(-1, n)
    pre = np.array([r[0] if r[1] is None else r[1] for r in records]).reshape(-1, n)
    if records and len(records[0]) == 5:
        first = np.array([r[3] for r in records])
        second = np.array([r[4] for r in records])
    else:
        first = second = np.zeros((len(records), n))
    return Trace(times, levels, pre, first, second, dts)
