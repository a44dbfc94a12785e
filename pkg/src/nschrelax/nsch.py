"""Semi-implicit projection scheme for the inviscid NSCH system.

One step runs five sub-steps in order: an implicit phase-field predictor,
a linearly implicit momentum predictor, a pressure Poisson solve, the
velocity projection, and an implicit phase-field corrector transported by
the projected velocity.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import scipy.sparse as sp

from . import matrices
from . import stencil as st
from .grid import CellField, FaceFieldX, FaceFieldY, GridSpec
from .sparse import KrylovConfig, PeriodicPoisson, solve_with_direct_preconditioner


@dataclass(frozen=True)
class ModelParams:
    gamma: float
    dt: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not self.dt > 0:
            raise ValueError("dt must be positive")


@dataclass
class NschState:
    """Phase field, velocity and pressure at one time level."""

    grid: GridSpec
    c: CellField
    u: FaceFieldX
    v: FaceFieldY
    p: CellField
    t: float = 0.0
    mass0: Optional[float] = None

    def __post_init__(self):
        self.grid.check(self.c, self.u, self.v, self.p)
        for name in ("c", "u", "v", "p"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"non-finite entries in {name}")
        if self.mass0 is None:
            self.mass0 = float(self.c.sum() * self.grid.cell_volume)

    @classmethod
    def initial(cls, grid, c0, u0=None, v0=None) -> "NschState":
        z = grid.zeros()
        return cls(grid, np.array(c0, dtype=float),
                   z.copy() if u0 is None else np.array(u0, dtype=float),
                   z.copy() if v0 is None else np.array(v0, dtype=float),
                   z.copy())

    def mass_drift(self) -> float:
        return float(self.c.sum() * self.grid.cell_volume) - self.mass0


@dataclass
class SolveStats:
    name: str
    residual: float
    iters: int


def solve_momentum(
    grid: GridSpec,
    u: FaceFieldX,
    v: FaceFieldY,
    fx: FaceFieldX,
    fy: FaceFieldY,
    dt: float,
    cfg: KrylovConfig,
    stats: Optional[list] = None,
) -> tuple[FaceFieldX, FaceFieldY]:
    """Solve ``w + dt * div(w (x) u^n) = u^n - dt * f`` for ``w``.

    The transporting velocity is frozen at ``(u, v)``, which decouples the
    two components into separate linear systems.
    """
    cx_mat, cy_mat = matrices.convection(grid, u, v)
    I = matrices.identity(grid)
    zero = grid.zeros()

    def ax(x):
        w = x.reshape(grid.shape)
        return (w + dt * st.convect(grid, w, zero, u, v)[0]).ravel()

    us, res, it = solve_with_direct_preconditioner(
        ax, I + dt * cx_mat, (u - dt * fx).ravel(), u.ravel(), cfg
    )
    if stats is not None:
        stats.append(SolveStats("momentum_x", res, it))
    if grid.is_1d:
        return us.reshape(grid.shape), np.zeros_like(v)

    def ay(y):
        w = y.reshape(grid.shape)
        return (w + dt * st.convect(grid, zero, w, u, v)[1]).ravel()

    vs, res, it = solve_with_direct_preconditioner(
        ay, I + dt * cy_mat, (v - dt * fy).ravel(), v.ravel(), cfg
    )
    if stats is not None:
        stats.append(SolveStats("momentum_y", res, it))
    return us.reshape(grid.shape), vs.reshape(grid.shape)


def capillary_force(
    grid: GridSpec,
    c_star: CellField,
    gamma: float,
    wpp_source: CellField,
    lap_source: Optional[CellField] = None,
) -> tuple[FaceFieldX, FaceFieldY]:
    """Face force ``c* [W''(c^n) grad c* - gamma grad lap (.)]`` with ``c*`` interpolated."""
    gx, gy = st.chem_potential_grad(grid, c_star, gamma, wpp_source, lap_source)
    ix, iy = st.interp_c_to_faces(grid, c_star)
    return ix * gx, iy * gy


class NschSolver:
    """Time stepper for one NSCH simulation on a fixed grid.

    Parameters
    ----------
    grid : GridSpec
    params : ModelParams
    krylov : KrylovConfig, optional
    """

    def __init__(self, grid: GridSpec, params: ModelParams, krylov: Optional[KrylovConfig] = None):
        self.grid = grid
        self.params = params
        self.krylov = krylov or KrylovConfig()
        self.poisson = PeriodicPoisson(grid)
        self._bih = matrices.biharmonic(grid)
        self.stats: list[SolveStats] = []

    # phase field ---------------------------------------------------------
    def _c_solve(self, name, rhs, x0, u, v, wpp_source):
        g, dt, gamma = self.grid, self.params.dt, self.params.gamma
        wx, wy = st.interp_wpp_to_faces(g, wpp_source)

        def apply(x):
            c = x.reshape(g.shape)
            gx, gy = st.grad_c_to_faces(g, c)
            tx, ty = st.grad_lap_to_faces(g, c)
            flux = st.div_faces_to_cells(g, wx * gx - gamma * tx, wy * gy - gamma * ty)
            return (c + dt * (st.div_cu_to_cells(g, c, u, v) - flux)).ravel()

        mat = (
            matrices.identity(g)
            + dt * matrices.div_cu(g, u, v)
            - dt * matrices.weighted_diffusion(g, wpp_source)
            + dt * gamma * self._bih
        )
        x, res, it = solve_with_direct_preconditioner(apply, mat, rhs.ravel(), x0.ravel(), self.krylov)
        self.stats.append(SolveStats(name, res, it))
        return x.reshape(g.shape)

    def predict_c(self, state: NschState) -> CellField:
        """Implicit predictor with transport ``u^n`` and W'' frozen at ``c^n``."""
        return self._c_solve("predict_c", state.c, state.c, state.u, state.v, state.c)

    def predict_u(self, state: NschState, c_star: CellField) -> tuple[FaceFieldX, FaceFieldY]:
        fx, fy = capillary_force(self.grid, c_star, self.params.gamma, state.c)
        return solve_momentum(self.grid, state.u, state.v, fx, fy, self.params.dt,
                              self.krylov, self.stats)

    def project(self, u_star: FaceFieldX, v_star: FaceFieldY):
        """Chorin projection; returns ``(p, u, v)`` with ``p`` of mean zero."""
        g, dt = self.grid, self.params.dt
        p = self.poisson.solve(st.div_faces_to_cells(g, u_star, v_star) / dt)
        gx, gy = st.grad_p_to_faces(g, p)
        return p, u_star - dt * gx, v_star - dt * gy

    def correct_c(self, state: NschState, c_star: CellField, u_next, v_next) -> CellField:
        """Implicit corrector with transport ``u^{n+1}`` and W'' frozen at ``c*``."""
        return self._c_solve("correct_c", state.c, c_star, u_next, v_next, c_star)

    def step(self, state: NschState) -> NschState:
        self.stats = []
        c_star = self.predict_c(state)
        u_star, v_star = self.predict_u(state, c_star)
        p, u, v = self.project(u_star, v_star)
        c = self.correct_c(state, c_star, u, v)
        return replace(state, c=c, u=u, v=v, p=p, t=state.t + self.params.dt)
