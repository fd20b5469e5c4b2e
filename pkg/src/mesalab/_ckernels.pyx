# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled stepping kernel; same operation sequence as ``_pykernels.advance``."""
from libc.math cimport exp, log, pow, fabs, fmin, isfinite

cdef double LOG_SWITCH = 600.0
cdef double TINY_SPEED = 1e-14
cdef double CLAMP = 1e-15

cdef int OK = 0
cdef int CFL_FAIL = 1
cdef int NONFINITE = 2
cdef int NEGATIVE = 3


cdef inline double _absorb(double u, double q, double dt) nogil:
    cdef double lg
    if u <= 0.0 or dt == 0.0:
        return u
    lg = -q * log(u)
    if lg > LOG_SWITCH:
        return fmin(u, u * pow(1.0 + q * dt * exp(-lg), -1.0 / q))
    return fmin(u, pow(exp(lg) + q * dt, -1.0 / q))


cdef inline double _pow(double u, double m) nogil:
    if u <= 0.0:
        return 0.0
    return exp(m * log(u))


cdef inline void _neumaier(double[::1] acc, int k, double x) nogil:
    cdef double s = acc[k]
    cdef double tot = s + x
    if fabs(s) >= fabs(x):
        acc[k + 1] += (s - tot) + x
    else:
        acc[k + 1] += (x - tot) + s
    acc[k] = tot


def advance(double[::1] u, double[::1] psi, double[::1] psi_c, double[::1] ledger,
            double t, double t_stop, double dx, double m, double p, bint absorb,
            int scheme, double cfl, double[::1] dt_out, schedule=None,
            Py_ssize_t sched_pos=0, trace=None):
    if trace is not None:
        raise ValueError("the compiled kernel does not record traces")
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t cap = dt_out.shape[0]
    cdef Py_ssize_t steps = 0, i, idx = -1
    cdef double[::1] sched
    cdef bint use_sched = schedule is not None
    if use_sched:
        sched = schedule
    cdef double[::1] F = _empty(n + 1)
    cdef double[::1] ut = _empty(n)
    cdef double q = p - 1.0
    cdef double speed, s, dt, y, tmp, lam, v, dec, scale, half, fl, fr, ul, ur
    cdef bint last
    cdef int status = OK

    with nogil:
        while t < t_stop and steps < cap:
            s = 0.0
            for i in range(n):
                if u[i] > s:
                    s = u[i]
            speed = m * exp((m - 1.0) * log(s)) if s > 0.0 else 0.0
            if use_sched:
                dt = sched[sched_pos + steps]
            else:
                dt = cfl * dx / (speed if speed > TINY_SPEED else TINY_SPEED)
            last = False
            if t + dt >= t_stop:
                dt = t_stop - t
                last = True
            if dt * speed > dx * (1.0 + 1e-12):
                status = CFL_FAIL
                break

            for i in range(n):
                y = _pow(u[i], m) * dt - psi_c[i]
                tmp = psi[i] + y
                psi_c[i] = (tmp - psi[i]) - y
                psi[i] = tmp

            half = 0.5 * dt
            dec = 0.0
            if absorb:
                for i in range(n):
                    ut[i] = _absorb(u[i], q, half)
                    dec += u[i] - ut[i]
            else:
                for i in range(n):
                    ut[i] = u[i]

            # transport speed after the first absorption half step
            s = 0.0
            for i in range(n):
                if ut[i] > s:
                    s = ut[i]
            speed = m * exp((m - 1.0) * log(s)) if s > 0.0 else 0.0
            if dt * speed > dx * (1.0 + 1e-12):
                status = CFL_FAIL
                break
            if scheme == 0:
                F[0] = 0.0
                for i in range(n):
                    F[i + 1] = _pow(ut[i], m)
            else:
                for i in range(n + 1):
                    if i == 0:
                        ul = 0.0
                        fl = 0.0
                    else:
                        ul = ut[i - 1]
                        fl = _pow(ul, m)
                    if i == n:
                        ur = ut[n - 1]
                    else:
                        ur = ut[i]
                    fr = _pow(ur, m)
                    F[i] = 0.5 * (fl + fr) - 0.5 * speed * (ur - ul)
            lam = dt / dx
            scale = s if s > 1.0 else 1.0
            for i in range(n):
                v = ut[i] - lam * (F[i + 1] - F[i])
                if not isfinite(v):
                    status = NONFINITE
                    idx = i
                    break
                if v < 0.0:
                    if v < -CLAMP * scale:
                        status = NEGATIVE
                        idx = i
                        break
                    v = 0.0
                if absorb:
                    tmp = _absorb(v, q, half)
                    dec += v - tmp
                    v = tmp
                u[i] = v
            if status != OK:
                break
            if absorb:
                _neumaier(ledger, 2, dec * dx)
            _neumaier(ledger, 0, (F[n] - F[0]) * dt)
            dt_out[steps] = dt
            steps += 1
            if last:
                t = t_stop
            else:
                t = t + dt
    return t, steps, status, idx


def _empty(Py_ssize_t n):
    import numpy as np
    return np.empty(n)
