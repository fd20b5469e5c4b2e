"""Finite-volume laboratory for ``u_t + (u^m)_x = -u^p`` and its singular limits.

The transport/absorption stepping loop runs in a compiled Cython kernel when
it is built and falls back to numpy otherwise; see :mod:`mesalab._backend`.
"""
from ._backend import available as available_backends
from ._backend import current as current_backend
from ._backend import set_backend
from .data import Box, Bump, MultiBox, Samples, read_field_csv, realize, write_field_csv
from .errors import (
    CFLViolation, ConfigError, DomainError, MesaLabError, NumericalError, ParameterError,
    ParseError, StudyError, UsageError,
)
from .grid import Field, Grid1D, l1_distance, l1_window, linf, make_grid, total_mass
from .limits import (
    MesaResult, iterated_limits_gap, mesa_project, ode_limit_solution, predicted_m_limit,
    predicted_p_limit, truncate_at_one,
)
from .model import (
    ModelParams, absorb_exact, decay_bound, flux, flux_deriv, p_barrier, psi_increment_bound,
    speed_bound,
)
from .solver import (
    RunConfig, RunResult, SchemeChoice, cfl_dt, hyperbolic_substep, numerical_flux, run, step,
)
from .viscous import run_viscous, viscous_step

__version__ = "0.1.0"
