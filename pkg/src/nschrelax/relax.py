"""Semi-implicit scheme for the hyperbolic relaxation of NSCH.

The relaxation system replaces the pressure constraint by artificial
compressibility (``alpha``), the fourth-order term by a penalty coupling to
``omega = K^{-1} c`` (``beta``), and the Cahn-Hilliard flux by a damped
auxiliary field ``m`` (``delta``).  The flux is eliminated from the phase
field update, which leaves the capillary term as ``-grad lap K^{-1} c``; that
form stays accurate to round-off even for very small ``beta``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
import scipy.sparse.linalg as spla

from . import matrices
from . import stencil as st
from .grid import CellField, FaceFieldX, FaceFieldY, GridSpec
from .nsch import SolveStats, capillary_force, solve_momentum
from .sparse import (
    EllipticOperator,
    KrylovConfig,
    ScreenedPoisson,
    build_elliptic,
    solve_with_direct_preconditioner,
)


@dataclass(frozen=True)
class RelaxParams:
    alpha: float
    beta: float
    delta: float
    gamma: float
    dt: float

    def __post_init__(self):
        for name in ("alpha", "beta", "delta", "gamma", "dt"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("alpha", "beta", "delta"):
            if getattr(self, name) > 1:
                raise ValueError(f"{name} must not exceed 1")


@dataclass
class RelaxState:
    grid: GridSpec
    c: CellField
    p: CellField
    omega: CellField
    u: FaceFieldX
    v: FaceFieldY
    mx: FaceFieldX
    my: FaceFieldY
    t: float = 0.0
    mass0: Optional[float] = None

    def __post_init__(self):
        fields = ("c", "p", "omega", "u", "v", "mx", "my")
        self.grid.check(*(getattr(self, f) for f in fields))
        for name in fields:
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"non-finite entries in {name}")
        if self.mass0 is None:
            self.mass0 = float(self.c.sum() * self.grid.cell_volume)

    def mass_drift(self) -> float:
        return float(self.c.sum() * self.grid.cell_volume) - self.mass0


class RelaxSolver:
    """Time stepper for one relaxation simulation.

    The elliptic operator ``K = I - gamma beta Lap_h`` and the pressure
    operator ``alpha I - dt^2 Lap_h`` are factorized once at construction.
    """

    def __init__(self, grid: GridSpec, params: RelaxParams, krylov: Optional[KrylovConfig] = None):
        self.grid = grid
        self.params = params
        self.krylov = krylov or KrylovConfig()
        self.K: EllipticOperator = build_elliptic(grid, params.gamma, params.beta)
        self.pressure_op = ScreenedPoisson(grid, params.alpha, params.dt ** 2)
        self._bih = matrices.biharmonic(grid)
        self.stats: list[SolveStats] = []

    @property
    def _a(self) -> float:
        dt, delta = self.params.dt, self.params.delta
        return dt * dt / (delta + dt)

    def init(self, c0: CellField, u0=None, v0=None) -> RelaxState:
        """Initial state with ``p = 0``, ``omega = K^{-1} c0`` and ``m = -grad mu(c0)``."""
        g = self.grid
        c0 = np.array(c0, dtype=float)
        z = g.zeros()
        gx, gy = st.chem_potential_grad(g, c0, self.params.gamma)
        return RelaxState(
            grid=g,
            c=c0,
            p=z.copy(),
            omega=self.K.solve(c0),
            u=z.copy() if u0 is None else np.array(u0, dtype=float),
            v=z.copy() if v0 is None else np.array(v0, dtype=float),
            mx=-gx,
            my=-gy,
        )

    def c_rhs(self, state: RelaxState) -> CellField:
        """``c^n - delta dt / (delta + dt) * div m^n``, shared by both phase-field solves."""
        dt, delta = self.params.dt, self.params.delta
        return state.c - (delta * dt / (delta + dt)) * st.div_faces_to_cells(self.grid, state.mx, state.my)

    def step_c(self, state: RelaxState, transport, wpp_source: CellField, rhs: CellField,
               x0: Optional[CellField] = None, name: str = "step_c") -> CellField:
        """Solve the implicit phase-field system of the relaxation scheme.

        Operator: ``x + dt div(x u) - a div(W''(wpp_source) grad x - gamma grad lap K^{-1} x)``
        with ``a = dt^2 / (delta + dt)``.  ``K^{-1}`` makes it dense, so it is
        applied matrix-free.  Since ``L K = A K + a gamma B`` is sparse (``A``
        the local part, ``B = div grad lap``), ``K (A K + a gamma B)^{-1}``
        serves as right preconditioner.
        """
        g = self.grid
        u, v = transport
        dt, gamma, a = self.params.dt, self.params.gamma, self._a
        wx, wy = st.interp_wpp_to_faces(g, wpp_source)

        def apply(x):
            c = x.reshape(g.shape)
            gx, gy = st.grad_c_to_faces(g, c)
            tx, ty = st.grad_lap_to_faces(g, self.K.solve(c))
            flux = st.div_faces_to_cells(g, wx * gx - gamma * tx, wy * gy - gamma * ty)
            return (c + dt * st.div_cu_to_cells(g, c, u, v) - a * flux).ravel()

        local = (
            matrices.identity(g)
            + dt * matrices.div_cu(g, u, v)
            - a * matrices.weighted_diffusion(g, wpp_source)
        )
        Kmat = self.K.matrix
        lu = spla.splu((local @ Kmat + a * gamma * self._bih).tocsc())

        def precond(z):
            return Kmat @ lu.solve(z)

        # ||L|| <= ||local|| + a gamma ||B|| since K^{-1} is an l-inf contraction.
        norm_proxy = local + a * gamma * self._bih
        x, res, it = solve_with_direct_preconditioner(
            apply, norm_proxy, rhs.ravel(), (state.c if x0 is None else x0).ravel(),
            self.krylov, M=precond,
        )
        self.stats.append(SolveStats(name, res, it))
        return x.reshape(g.shape)

    def predict_u(self, state: RelaxState, c_star: CellField, omega_star: CellField):
        fx, fy = capillary_force(self.grid, c_star, self.params.gamma, state.c, omega_star)
        return solve_momentum(self.grid, state.u, state.v, fx, fy, self.params.dt,
                              self.krylov, self.stats)

    def pressure(self, state: RelaxState, u_star: FaceFieldX, v_star: FaceFieldY):
        """Artificial-compressibility update ``(alpha - dt^2 Lap) p = alpha p^n - dt div u*``."""
        g, dt, alpha = self.grid, self.params.dt, self.params.alpha
        d = st.div_faces_to_cells(g, u_star, v_star)
        d -= d.mean()  # exact zero in exact arithmetic; drop the round-off
        p = self.pressure_op.solve(alpha * state.p - dt * d)
        gx, gy = st.grad_p_to_faces(g, p)
        return p, u_star - dt * gx, v_star - dt * gy

    def correct_u(self, u_ss: FaceFieldX, v_ss: FaceFieldY):
        """Explicit ``u** - dt/2 (div u**) u**`` correction."""
        rx, ry = st.nonconservative_divu_u(self.grid, u_ss, v_ss)
        dt = self.params.dt
        return u_ss - 0.5 * dt * rx, v_ss - 0.5 * dt * ry

    def update_m(self, state: RelaxState, c_next: CellField, omega_next: CellField,
                 c_star: CellField):
        dt, delta = self.params.dt, self.params.delta
        gx, gy = st.chem_potential_grad(self.grid, c_next, self.params.gamma, c_star, omega_next)
        keep, push = delta / (delta + dt), dt / (delta + dt)
        return keep * state.mx - push * gx, keep * state.my - push * gy

    def step(self, state: RelaxState) -> RelaxState:
        self.stats = []
        rhs = self.c_rhs(state)
        c_star = self.step_c(state, (state.u, state.v), state.c, rhs, name="predict_c")
        omega_star = self.K.solve(c_star)
        u_star, v_star = self.predict_u(state, c_star, omega_star)
        p, u_ss, v_ss = self.pressure(state, u_star, v_star)
        u, v = self.correct_u(u_ss, v_ss)
        c = self.step_c(state, (u, v), c_star, rhs, x0=c_star, name="correct_c")
        omega = self.K.solve(c)
        mx, my = self.update_m(state, c, omega, c_star)
        return replace(state, c=c, p=p, omega=omega, u=u, v=v, mx=mx, my=my,
                       t=state.t + self.params.dt)
