"""Staggered-grid solvers for the inviscid Navier-Stokes-Cahn-Hilliard system
and its hyperbolic relaxation, with energy and error diagnostics."""

from .grid import GridSpec, average_u_to_cell, average_v_to_cell, wrap
from .nsch import ModelParams, NschSolver, NschState
from .relax import RelaxParams, RelaxSolver, RelaxState
from .sparse import (
    Breakdown,
    EllipticOperator,
    KrylovConfig,
    LinearOperatorHandle,
    NonConvergence,
    build_elliptic,
    elliptic_solve,
    gmres_solve,
)

__version__ = "0.1.0"
