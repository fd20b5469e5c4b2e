import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mesalab import (
    ConfigError, DomainError, ModelParams, ParameterError, absorb_exact, decay_bound, flux,
    flux_deriv, p_barrier, psi_increment_bound, speed_bound,
)

from oracles import finite_difference, ode_flow


def test_params_validation():
    ModelParams(1.5, 1.5)
    ModelParams(2.0, 0.5, absorption_enabled=False)
    with pytest.raises(ConfigError):
        ModelParams(1.0, 2.0)
    with pytest.raises(ConfigError):
        ModelParams(2.0, 1.0)


@pytest.mark.parametrize("m", [1.5, 2, 7.3, 64])
def test_flux_fixed_points(m):
    assert flux(0.0, m) == 0.0
    assert flux(1.0, m) == 1.0


def test_flux_values():
    assert flux(0.5, 2) == 0.25
    with pytest.raises(DomainError):
        flux(-0.1, 2)


def test_flux_deriv_values():
    assert flux_deriv(0.0, 2) == 0.0
    assert flux_deriv(3.0, 2) == 6.0
    assert flux_deriv(1.0, 5) == 5.0
    with pytest.raises(DomainError):
        flux_deriv(-1.0, 2)


@pytest.mark.parametrize("u, m", [(0.3, 2.0), (1.7, 3.5), (0.9, 32.0)])
def test_flux_deriv_matches_finite_difference(u, m):
    fd = finite_difference(lambda v: v**m, u)
    assert flux_deriv(u, m) == pytest.approx(fd, rel=1e-7)


def test_absorb_exact_examples():
    assert absorb_exact(1.0, 2.0, 1.0) == pytest.approx(0.5, rel=1e-15)
    assert absorb_exact(0.0, 3.0, 5.0) == 0.0
    assert absorb_exact(2.0, 3.0, 1.0) == pytest.approx(2.0 / 3.0, rel=1e-15)
    with pytest.raises(ParameterError):
        absorb_exact(1.0, 1.0, 1.0)


@pytest.mark.parametrize("u, p, t", [(1.0, 2.0, 1.0), (2.0, 3.0, 0.7), (1.3, 8.0, 0.2), (0.4, 1.5, 3.0)])
def test_absorb_exact_matches_rk4(u, p, t):
    assert absorb_exact(u, p, t) == pytest.approx(ode_flow(u, p, t), rel=1e-9)


@pytest.mark.parametrize("u, p, dt", [(2.0, 2000.0, 0.1), (3.0, 700.0, 1e-3), (1e-9, 80.0, 2.0)])
def test_absorb_exact_extreme_exponents(u, p, dt):
    mp = pytest.importorskip("mpmath")
    mp.mp.dps = 50
    q = mp.mpf(p) - 1
    expected = mp.mpf(u) * (1 + q * dt * mp.mpf(u) ** q) ** (-1 / q)
    assert absorb_exact(u, p, dt) == pytest.approx(float(expected), rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 5), st.floats(1.01, 70), st.floats(0, 3), st.floats(0, 3))
def test_absorb_semigroup(u, p, s, t):
    lhs = absorb_exact(absorb_exact(u, p, s), p, t)
    rhs = absorb_exact(u, p, s + t)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("p", [1.5, 2.0, 8.0, 64.0])
def test_absorb_monotone_lattice(p):
    us = np.linspace(0, 3, 100)
    for dt in np.linspace(0, 2, 100):
        out = [absorb_exact(u, p, dt) for u in us]
        assert all(b >= a for a, b in zip(out, out[1:]))
        assert all(0 <= o <= u for o, u in zip(out, us))


def test_decay_bound_examples():
    assert decay_bound(2, 1, 2) == pytest.approx(2.0, rel=1e-15)
    assert decay_bound(3, 2, 2) == pytest.approx(1.0, rel=1e-15)
    with pytest.raises(DomainError):
        decay_bound(2, 0, 1)


def test_decay_bound_tends_to_one():
    vals = [decay_bound(10.0**k, 1.0, 2.0) for k in range(1, 7)]
    gaps = [abs(v - 1.0) for v in vals]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 2e-5


def test_p_barrier_examples():
    assert p_barrier(2, 1, 1) == pytest.approx(0.5, rel=1e-15)
    assert p_barrier(5, 0, 1.7) == 1.7
    assert p_barrier(3, 1, 1) == pytest.approx(3**-0.5, rel=1e-14)
    assert p_barrier(3, 1, 0.0) == 0.0


def test_p_barrier_decreasing():
    vals = [p_barrier(4.0, t, 2.0) for t in np.linspace(0, 5, 50)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


@settings(max_examples=200, deadline=None)
@given(st.floats(1.05, 64), st.floats(0, 4), st.floats(0, 4), st.floats(0.01, 5))
def test_p_barrier_is_absorption_orbit(p, t, s, a):
    lhs = absorb_exact(p_barrier(p, t, a), p, s)
    assert lhs == pytest.approx(p_barrier(p, t + s, a), rel=1e-12)


def test_speed_bound_examples():
    assert speed_bound(2, 3) == 6
    assert speed_bound(7, 0) == 0
    assert speed_bound(5, 1) == 5


def test_psi_increment_bound_zero_width():
    assert psi_increment_bound(8, 2.0, 1.0, 0.0) == 0.0
    # hand evaluation for m = 2, mass 1, t = 0, h = 1: 2 * 1 * sqrt(2) * 1 * 1
    assert psi_increment_bound(2, 1.0, 0.0, 1.0) == pytest.approx(2 * math.sqrt(2), rel=1e-14)
