"""Pure numpy stepping kernels.

Fallback for :mod:`mesalab._ckernels`; both follow the same per-step
operation sequence so that runs agree to roundoff.
"""
from __future__ import annotations

import numpy as np

from .model import LOG_SWITCH

GODUNOV = 0
LAX_FRIEDRICHS = 1

TINY_SPEED = 1e-14
CLAMP = 1e-15

# status codes shared with the compiled kernel
OK = 0
CFL_FAIL = 1
NONFINITE = 2
NEGATIVE = 3


def absorb_array(u: np.ndarray, p: float, dt: float) -> np.ndarray:
    """Cell-wise exact flow of ``u' = -u^p`` over ``dt``."""
    out = u.copy()
    if dt == 0.0:
        return out
    q = p - 1.0
    pos = u > 0.0
    up = u[pos]
    lg = -q * np.log(up)
    res = np.empty_like(up)
    small = lg > LOG_SWITCH
    res[~small] = (np.exp(lg[~small]) + q * dt) ** (-1.0 / q)
    if np.any(small):
        res[small] = up[small] * (1.0 + q * dt * np.exp(-lg[small])) ** (-1.0 / q)
    np.minimum(res, up, out=res)
    out[pos] = res
    return out


def power(u: np.ndarray, m: float) -> np.ndarray:
    out = np.zeros_like(u)
    pos = u > 0.0
    out[pos] = np.exp(m * np.log(u[pos]))
    return out


def max_speed(u: np.ndarray, m: float) -> float:
    s = float(u.max()) if u.size else 0.0
    if s <= 0.0:
        return 0.0
    return m * np.exp((m - 1.0) * np.log(s))


def face_fluxes(u: np.ndarray, m: float, scheme: int, alpha: float) -> np.ndarray:
    """Fluxes on the ``n+1`` faces; left ghost is 0, right ghost copies the last cell."""
    f = power(u, m)
    F = np.empty(u.size + 1)
    if scheme == GODUNOV:
        F[0] = 0.0
        F[1:] = f
    else:
        ul = np.concatenate(([0.0], u))
        ur = np.concatenate((u, u[-1:]))
        fl = np.concatenate(([0.0], f))
        fr = np.concatenate((f, f[-1:]))
        F[:] = 0.5 * (fl + fr) - 0.5 * alpha * (ur - ul)
    return F


def hyperbolic_update(u, dt, dx, m, scheme):
    """One conservative transport update. Returns ``(u_new, outflow, status, index)``."""
    speed = max_speed(u, m)
    if dt * speed > dx * (1.0 + 1e-12):
        return u, 0.0, CFL_FAIL, -1
    F = face_fluxes(u, m, scheme, speed)
    lam = dt / dx
    new = u - lam * (F[1:] - F[:-1])
    outflow = (F[-1] - F[0]) * dt
    bad = ~np.isfinite(new)
    if bad.any():
        return new, outflow, NONFINITE, int(np.argmax(bad))
    neg = new < 0.0
    if neg.any():
        scale = max(1.0, float(u.max()))
        if np.any(new[neg] < -CLAMP * scale):
            return new, outflow, NEGATIVE, int(np.argmax(new < -CLAMP * scale))
        new[neg] = 0.0
    return new, outflow, OK, -1


def advance(u, psi, psi_c, ledger, t, t_stop, dx, m, p, absorb, scheme, cfl,
            dt_out, schedule=None, sched_pos=0, trace=None):
    """March ``u`` in place from ``t`` toward ``t_stop``.

    Stops at ``t_stop`` or after ``len(dt_out)`` steps. ``ledger`` holds
    Neumaier sums ``[outflow, outflow_comp, absorbed, absorbed_comp]``.
    Returns ``(t, steps, status, index)``.
    """
    steps = 0
    cap = dt_out.shape[0]
    while t < t_stop and steps < cap:
        speed = max_speed(u, m)
        if schedule is not None:
            dt = schedule[sched_pos + steps]
        else:
            dt = cfl * dx / max(speed, TINY_SPEED)
        last = False
        if t + dt >= t_stop:
            dt = t_stop - t
            last = True
        if dt * speed > dx * (1.0 + 1e-12):
            return t, steps, CFL_FAIL, -1

        y = power(u, m) * dt - psi_c
        tmp = psi + y
        psi_c[:] = (tmp - psi) - y
        psi[:] = tmp

        if absorb:
            ut = absorb_array(u, p, 0.5 * dt)
            dec1 = u - ut
        else:
            ut = u
        if trace is not None:
            trace.append((u.copy(), ut.copy() if absorb else None, dt))
        new, out, status, idx = hyperbolic_update(ut, dt, dx, m, scheme)
        if status != OK:
            return t, steps, status, idx
        if absorb:
            fin = absorb_array(new, p, 0.5 * dt)
            dec2 = new - fin
            new = fin
            _neumaier(ledger, 2, float(np.sum(dec1 + dec2)) * dx)
            if trace is not None:
                trace[-1] = trace[-1] + (dec1, dec2)
        _neumaier(ledger, 0, out)
        u[:] = new
        dt_out[steps] = dt
        steps += 1
        t = t_stop if last else t + dt
    return t, steps, OK, -1


def _neumaier(acc, k, x):
    s = acc[k]
    tot = s + x
    if abs(s) >= abs(x):
        acc[k + 1] += (s - tot) + x
    else:
        acc[k + 1] += (x - tot) + s
    acc[k] = tot
