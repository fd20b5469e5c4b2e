"""Checkers and studies: entropy residual, bound audits, contraction, convergence tables."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import _pykernels
from .errors import StudyError, UsageError
from .grid import Field, l1_distance, l1_window, linf, total_mass
from .model import decay_bound, p_barrier, psi_increment_bound
from .solver import RunConfig, RunResult, run


@dataclass(frozen=True)
class Tolerance:
    value: float
    rationale: str


TOLERANCES: dict[str, Tolerance] = {
    "positivity": Tolerance(0.0, "roundoff negatives are clamped inside the kernel"),
    "linf": Tolerance(1e-15, "monotone update; only roundoff can exceed the initial maximum"),
    "ledger": Tolerance(1e-11, "relative closure of mass + absorbed + outflow vs initial mass"),
    "mass_monotone": Tolerance(1e-11, "relative; absorption only removes mass"),
    "decay_slack": Tolerance(0.05, "relative slack on 2M/((m-1)t) for first-order smearing"),
    "decay_t_min": Tolerance(0.1, "decay bound is audited only for t >= this time"),
    "barrier": Tolerance(1e-3, "absolute slack on the spatially constant supersolution"),
    "comparison": Tolerance(1e-12, "absorbing run vs absorption-free run, same time levels"),
    "contraction_full": Tolerance(1e-12, "full-domain L1 difference must not grow"),
    "contraction_window_cells": Tolerance(2.0, "window slop in cells times sup|du0|"),
    "psi_slack": Tolerance(0.05, "relative slack on the psi time-increment bound"),
    "entropy_per_dx": Tolerance(10.0, "entropy residual must be >= -C*dx"),
    "conservation": Tolerance(1e-10, "k=0 entropy functional equals the conservation defect"),
}


def tol(name: str) -> float:
    return TOLERANCES[name].value


# --------------------------------------------------------------------------- reports


@dataclass(frozen=True)
class BoundCheck:
    """``slack >= 0`` means the bound held with that margin."""

    name: str
    slack: float
    tolerance: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.slack >= -self.tolerance


@dataclass
class BoundReport:
    checks: list[BoundCheck] = field(default_factory=list)

    def add(self, name: str, slack: float, tolerance: float, detail: str = "") -> None:
        self.checks.append(BoundCheck(name, float(slack), float(tolerance), detail))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> BoundCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            c.name: {"slack": c.slack, "tolerance": c.tolerance, "passed": c.passed,
                     "detail": c.detail}
            for c in self.checks
        }


@dataclass
class ConvergenceTable:
    params: np.ndarray
    errors: np.ndarray
    ratios: np.ndarray
    metadata: dict = field(default_factory=dict)

    def rows(self) -> list[tuple[float, float, float]]:
        return list(zip(self.params.tolist(), self.errors.tolist(), self.ratios.tolist()))

    def strictly_decreasing(self) -> bool:
        return bool(np.all(np.diff(self.errors) < 0))

    def to_csv_text(self) -> str:
        lines = ["param,error,ratio"]
        lines += [f"{p:.17g},{e:.17g},{r:.17g}" for p, e, r in self.rows()]
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {"rows": [{"param": p, "error": e, "ratio": None if math.isnan(r) else r}
                         for p, e, r in self.rows()],
                "metadata": self.metadata}


# --------------------------------------------------------------------------- entropy


def _hat(x: np.ndarray, centers: np.ndarray, half_width: float) -> np.ndarray:
    return np.clip(1.0 - np.abs(x[:, None] - centers[None, :]) / half_width, 0.0, None)


def hat_family(n_cells: int, times: np.ndarray, half_width_cells: int | None = None,
               stride_cells: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Fixed tensor-product hat family; returns (space hats (n, h), time hats (N+1, k)).

    Space hats sit on interior cells and vanish on the two outermost cells.
    Their default half width is 1/16 of the domain, so a non-entropic shock
    produces an O(1) negative integral that does not shrink with dx. Time hats
    are centered at 1/4, 1/2, 3/4 of the run and vanish at both ends.
    """
    w = half_width_cells if half_width_cells is not None else max(8, n_cells // 16)
    stride = stride_cells if stride_cells is not None else max(4, w // 2)
    centers = np.arange(w + 1, n_cells - w - 1, stride, dtype=float)
    A = _hat(np.arange(n_cells, dtype=float), centers, float(w))
    t0, t1 = times[0], times[-1]
    span = t1 - t0
    tc = t0 + span * np.array([0.25, 0.5, 0.75])
    B = _hat(times, tc, 0.25 * span)
    B[0] = 0.0
    B[-1] = 0.0
    return A, B


def _entropy_flux(pre: np.ndarray, k: float, m: float, scheme: str) -> np.ndarray:
    """Numerical entropy flux on faces 0..n (face j sits left of cell j)."""
    nsteps, n = pre.shape
    ext = np.concatenate([np.zeros((nsteps, 1)), pre, pre[:, -1:]], axis=1)
    if scheme == "godunov_upwind":
        return np.abs(_pykernels.power(ext[:, :-1], m) - k**m)
    # Crandall-Majda flux F(a v k, b v k) - F(a ^ k, b ^ k) for global Lax-Friedrichs
    alpha = np.array([_pykernels.max_speed(row, m) for row in pre])[:, None]

    def lf(a, b):
        return 0.5 * (_pykernels.power(a, m) + _pykernels.power(b, m)) - 0.5 * alpha * (b - a)

    a, b = ext[:, :-1], ext[:, 1:]
    return lf(np.maximum(a, k), np.maximum(b, k)) - lf(np.minimum(a, k), np.minimum(b, k))


def entropy_functional(result: RunResult, k: float, m: float | None = None,
                       family: tuple[np.ndarray, np.ndarray] | None = None) -> np.ndarray:
    """Discrete Kruzhkov integral for every test function of the family.

    Returns an array of shape (time hats, space hats). Entry values are
    ``sum dx |u^{n+1}-k| (eta^{n+1}-eta^n) + dt_n Q_{j}(eta_j - eta_{j-1})
    - dx sign(.-k) a^n eta^n`` where ``a^n`` is the amount absorbed in step n.
    """
    tr = result.trace
    if tr is None:
        raise UsageError("entropy residual needs a traced run (run(..., trace=True))")
    if tr.levels.shape[0] < 3:
        raise UsageError("entropy residual needs at least 3 time levels")
    if k < 0:
        raise UsageError(f"k must be nonnegative, got {k}")
    m = result.config.params.m if m is None else m
    dx = result.config.grid.dx
    A, B = family if family is not None else hat_family(tr.levels.shape[1], tr.times)

    E = np.abs(tr.levels - k)
    dB = np.diff(B, axis=0)
    term_t = dx * (dB.T @ (E[1:] @ A))

    Q = _entropy_flux(tr.pre_transport, k, m, result.config.scheme.name)
    A_ext = np.vstack([np.zeros((1, A.shape[1])), A, np.zeros((1, A.shape[1]))])
    dA = np.diff(A_ext, axis=0)  # face j: a_j - a_{j-1}, j = 0..n
    term_x = (B[:-1] * tr.dts[:, None]).T @ (Q @ dA)

    # sign taken at the end of each absorption half step, where the
    # one-step entropy inequality holds for every k
    src = (np.sign(tr.pre_transport - k) * tr.absorbed_first
           + np.sign(tr.levels[1:] - k) * tr.absorbed_second)
    term_s = -dx * (B[:-1].T @ (src @ A))
    return term_t + term_x + term_s


def entropy_residual(result: RunResult, k: float, m: float | None = None,
                     p: float | None = None) -> float:
    """Most negative Kruzhkov integral over the test family (0 if none is negative).

    ``p`` is accepted for symmetry with the model; the absorption term uses
    the exact per-step decrements recorded in the trace.
    """
    del p
    return float(min(0.0, entropy_functional(result, k, m).min()))


def k_lattice(result: RunResult, count: int = 9) -> np.ndarray:
    return np.linspace(0.0, linf(result.initial), count)


def conservation_defect(result: RunResult) -> float:
    """Largest |weak-form residual| over the test family (the k = 0 functional)."""
    return float(np.abs(entropy_functional(result, 0.0)).max())


# --------------------------------------------------------------------------- audits


def audit_bounds(result: RunResult, config: RunConfig | None = None) -> BoundReport:
    config = config or result.config
    params = config.params
    report = BoundReport()
    u0 = result.initial
    a0 = linf(u0)
    m0 = total_mass(u0)
    times = result.times

    report.add("positivity", min(float(result.snapshots[t].values.min()) for t in times),
               tol("positivity"), "min over snapshots of min_i u_i")
    report.add("linf", min(a0 - linf(result.snapshots[t]) for t in times), tol("linf"),
               "linf(u0) - max_t linf(u(t))")
    report.add("mass_ledger", -max(result.ledger_defect(t) for t in times), tol("ledger"),
               "relative closure defect of mass + absorbed + outflow")

    if params.absorption_enabled:
        slack = min(m0 - (total_mass(result.snapshots[t]) + result.outflow_at[t]) for t in times)
        report.add("mass_monotone", slack / max(m0, 1e-300) if m0 > 0 else slack,
                   tol("mass_monotone"), "mass(t) + outflow(t) <= mass(0)")
        slacks = [p_barrier(params.p, t, a0) - linf(result.snapshots[t]) for t in times]
        report.add("p_barrier", min(slacks), tol("barrier"), "p_barrier(p, t, linf(u0)) - linf(u(t))")
    else:
        slacks = [total_mass(result.snapshots[t]) + result.outflow_at[t] - m0 for t in times]
        report.add("mass_conservation", -max(abs(s) for s in slacks) / max(m0, 1e-300)
                   if m0 > 0 else 0.0, tol("ledger"), "mass(t) + outflow(t) = mass(0)")
        slacks = []
        for t in (t for t in times if t >= tol("decay_t_min")):
            bound = 2.0 * m0 / ((params.m - 1.0) * t) * (1.0 + tol("decay_slack"))
            peak = linf(result.snapshots[t]) ** params.m
            slacks.append((bound - peak) / bound if bound > 0 else -peak)
        slack = min(slacks, default=0.0)
        report.add("decay_bound", slack, 0.0,
                   "relative margin of max u^m under 1.05 * 2M/((m-1)t), t >= 0.1")
    return report


def comparison_slack(absorbing: RunResult, free: RunResult) -> float:
    """min over shared snapshots of (free - absorbing); >= -tol means u_{m,p} <= v_m."""
    _require_aligned(absorbing, free)
    return min(float(np.min(free.snapshots[t].values - absorbing.snapshots[t].values))
               for t in absorbing.times)


def _require_aligned(a: RunResult, b: RunResult) -> None:
    if a.config.grid != b.config.grid:
        raise UsageError("runs use different grids")
    if a.times != b.times:
        raise UsageError("runs have different snapshot times")


def contraction_check(resA: RunResult, resB: RunResult, R: float, N: float,
                      center: float = 0.0) -> BoundReport:
    """Windowed L1 contraction on shrinking balls plus full-domain monotonicity.

    Balls are clipped to the computational domain; the data vanish outside it
    initially, and mass that has left through the boundary only lowers the
    left-hand side.
    """
    _require_aligned(resA, resB)
    grid = resA.config.grid
    du0 = resA.initial - resB.initial
    slop = tol("contraction_window_cells") * grid.dx * linf(du0)
    report = BoundReport()

    def clipped(r):
        lo, hi = max(center - r, grid.xmin), min(center + r, grid.xmax)
        return (lo, hi) if lo < hi else None

    win0 = clipped(R)
    rhs = l1_window(du0, *win0) if win0 else 0.0
    slack, checked = math.inf, 0
    for t in resA.times:
        if t <= 0 or (N > 0 and t >= R / N):
            continue
        win = clipped(R - N * t)
        if win is None:
            continue
        lhs = l1_window(resA.snapshots[t] - resB.snapshots[t], *win)
        slack = min(slack, rhs - lhs)
        checked += 1
    report.add("windowed_contraction", slack if checked else 0.0, slop,
               f"{checked} snapshot(s) with t < R/N checked")

    dists = [total_mass(du0)] + [l1_distance(resA.snapshots[t], resB.snapshots[t])
                                 for t in resA.times if t > 0]
    growth = max((b - a for a, b in zip(dists, dists[1:])), default=0.0)
    report.add("l1_nonincreasing", -growth, tol("contraction_full"),
               "max growth of the full-domain L1 difference between snapshots")
    return report


def run_shared(configs: Sequence[RunConfig], **run_kwargs) -> list[RunResult]:
    """Run several configs on one common sequence of time levels.

    The schedule comes from the cell-wise maximum of the initial data; by
    discrete comparison every run stays below that envelope, so its CFL steps
    are stable for all of them. Sharing time levels makes the discrete
    comparison and contraction properties hold to roundoff.
    """
    base = configs[0]
    for c in configs[1:]:
        if (c.grid, c.t_end, c.output_times, c.scheme) != (base.grid, base.t_end,
                                                          base.output_times, base.scheme):
            raise UsageError("shared runs must agree on grid, times and scheme")
        if c.params.m != base.params.m:
            raise UsageError("shared runs must use the same m")
    fields = [c.initial_field() for c in configs]
    env_vals = np.max([f.values for f in fields], axis=0)
    absorb = all(c.params.absorption_enabled for c in configs)
    env_params = base.params if absorb else next(
        c.params for c in configs if not c.params.absorption_enabled)
    env_cfg = replace(base, params=env_params, initial=Field(base.grid, env_vals))
    envelope = run(env_cfg, **run_kwargs)
    results = []
    for c, f in zip(configs, fields):
        if c.params == env_params and np.array_equal(f.values, env_vals):
            results.append(envelope)
        else:
            results.append(run(c, dt_schedule=envelope.dt_history, **run_kwargs))
    return results


def psi_time_independence(result: RunResult, t1: float, t2: float) -> float:
    if t1 not in result.psi_at or t2 not in result.psi_at:
        raise UsageError(f"psi snapshots at t={t1} and t={t2} are required")
    return l1_distance(result.psi_at[t2], result.psi_at[t1])


def psi_bound(result: RunResult, t1: float, t2: float) -> float:
    """Closed-form bound on :func:`psi_time_independence` for ``t1 <= t2``."""
    lo, hi = min(t1, t2), max(t1, t2)
    return psi_increment_bound(result.config.params.m, total_mass(result.initial), lo, hi - lo)


# --------------------------------------------------------------------------- studies

Reference = Field | Mapping[float, Field] | Callable[[float], Field]


def _reference_at(reference: Reference, t: float) -> Field:
    if isinstance(reference, Field):
        return reference
    if isinstance(reference, Mapping):
        return reference[t]
    return reference(t)


def convergence_study(parameter_list: Iterable[float], reference: Reference,
                      runner: Callable[[float], RunResult], times: Sequence[float] | None = None,
                      window: tuple[float, float] | None = None, workers: int = 1,
                      metadata: dict | None = None) -> ConvergenceTable:
    """Sup over ``times`` of the (windowed) L1 distance to ``reference`` per parameter."""
    params = sorted(float(p) for p in parameter_list)
    if len(params) < 3:
        raise UsageError("a convergence study needs at least 3 parameter values")
    if any(b <= a for a, b in zip(params, params[1:])):
        raise UsageError("parameter values must be distinct")
    if times is None:
        if not isinstance(reference, Mapping):
            raise UsageError("times are required unless the reference is a time map")
        times = sorted(reference)
    times = sorted(float(t) for t in times)

    def one(param: float) -> float:
        try:
            res = runner(param)
        except Exception as exc:  # noqa: BLE001 - re-raised with the parameter attached
            raise StudyError(param, exc) from exc
        return max(l1_distance(res.snapshots[t], _reference_at(reference, t), window)
                   for t in times)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            errors = list(pool.map(one, params))
    else:
        errors = [one(p) for p in params]
    err = np.array(errors)
    ratios = np.full(err.size, np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios[1:] = err[:-1] / err[1:]
    meta = {"norm": "L1" if window is None else f"L1({window[0]}, {window[1]})",
            "times": times}
    meta.update(metadata or {})
    return ConvergenceTable(np.array(params), err, ratios, meta)
