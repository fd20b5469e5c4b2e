"""Scalar ingredients of ``u_t + (u^m)_x = -u^p``.

Flux, characteristic speed, the exact flow of the absorption ODE
``u' = -u^p`` and the closed-form a priori bounds used by the audits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError, DomainError, ParameterError

# Above this value of -(p-1)*ln(u) the absorption flow switches to the small-u form.
LOG_SWITCH = 600.0


@dataclass(frozen=True)
class ModelParams:
    m: float
    p: float = 2.0
    absorption_enabled: bool = True

    def __post_init__(self) -> None:
        if not math.isfinite(self.m) or self.m <= 1:
            raise ConfigError(f"model.m must be > 1, got {self.m}")
        if self.absorption_enabled and (not math.isfinite(self.p) or self.p <= 1):
            raise ConfigError(f"model.p must be > 1 when absorption is on, got {self.p}")


def _check_state(u: float) -> None:
    if u < 0:
        raise DomainError(f"state must be nonnegative, got {u}")


def flux(u: float, m: float) -> float:
    _check_state(u)
    return u**m


def flux_deriv(u: float, m: float) -> float:
    _check_state(u)
    if u == 0.0:
        return 0.0
    return m * u ** (m - 1.0)


def absorb_exact(u: float, p: float, dt: float) -> float:
    """Exact solution of ``u' = -u^p`` after time ``dt`` starting from ``u``."""
    if p <= 1:
        raise ParameterError(f"absorption exponent must be > 1, got {p}")
    _check_state(u)
    if dt < 0:
        raise DomainError(f"dt must be nonnegative, got {dt}")
    if u == 0.0 or dt == 0.0:
        return u
    q = p - 1.0
    lg = -q * math.log(u)
    if lg > LOG_SWITCH:
        # u^(-q) would overflow; the correction to u is below roundoff
        return min(u, u * (1.0 + q * dt * math.exp(-lg)) ** (-1.0 / q))
    # each operation is monotone, so the map is exactly monotone in u
    return min(u, (math.exp(lg) + q * dt) ** (-1.0 / q))


def decay_bound(m: float, t: float, mass0: float) -> float:
    """Pointwise bound ``(2 M / ((m-1) t))^(1/m)`` for the absorption-free solution."""
    if m <= 1:
        raise ParameterError(f"m must be > 1, got {m}")
    if t <= 0:
        raise DomainError(f"decay bound needs t > 0, got {t}")
    if mass0 < 0:
        raise DomainError(f"mass must be nonnegative, got {mass0}")
    if mass0 == 0:
        return 0.0
    return math.exp((math.log(2.0 * mass0) - math.log((m - 1.0) * t)) / m)


def p_barrier(p: float, t: float, linf0: float) -> float:
    """Spatially constant supersolution ``((p-1) t + A^(1-p))^(-1/(p-1))``."""
    if p <= 1:
        raise ParameterError(f"p must be > 1, got {p}")
    if t < 0:
        raise DomainError(f"t must be nonnegative, got {t}")
    if linf0 < 0:
        raise DomainError(f"linf0 must be nonnegative, got {linf0}")
    if linf0 == 0:
        return 0.0
    q = p - 1.0
    a = -q * math.log(linf0)
    if q * t == 0:
        return linf0
    b = math.log(q * t)
    hi, lo = max(a, b), min(a, b)
    return math.exp(-(hi + math.log1p(math.exp(lo - hi))) / q)


def speed_bound(m: float, linf0: float) -> float:
    if linf0 < 0:
        raise DomainError(f"linf0 must be nonnegative, got {linf0}")
    if linf0 == 0:
        return 0.0
    return m * linf0 ** (m - 1.0)


def psi_increment_bound(m: float, mass0: float, t: float, h: float) -> float:
    """Upper bound on the L1 growth of ``psi_m(., t)`` between ``t`` and ``t + h``."""
    if m <= 1:
        raise ParameterError(f"m must be > 1, got {m}")
    if t < 0 or h < 0:
        raise DomainError("t and h must be nonnegative")
    return (
        m / (m - 1.0)
        * (m - 1.0) ** (1.0 / m)
        * 2.0 ** (1.0 - 1.0 / m)
        * mass0 ** (2.0 - 1.0 / m)
        * ((t + h) ** (1.0 / m) - t ** (1.0 / m))
    )
