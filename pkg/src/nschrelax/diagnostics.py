"""Scalar functionals of NSCH and relaxation states.

Quadrature: every cell and every face carries the weight ``dx * dy``.
Velocities enter the kinetic energy through their cell averages.
"""

from __future__ import annotations

from dataclasses import astuple, dataclass, fields

import numpy as np

from . import stencil as st
from .grid import GridSpec, average_u_to_cell, average_v_to_cell
from .nsch import NschState
from .relax import RelaxParams, RelaxState
from .sparse import EllipticOperator


@dataclass(frozen=True)
class EnergyRecord:
    t: float
    total: float
    kinetic: float
    doublewell: float
    gradient: float
    penalty: float = 0.0
    pressure: float = 0.0
    flux: float = 0.0


@dataclass(frozen=True)
class ErrorReport:
    """Weighted L2 distances between a relaxation state and an NSCH state."""

    t: float
    p_err: float
    c_err: float
    c_sq_err: float
    penalty_err: float
    u_err: float
    flux_err: float
    grad_err: float

    @staticmethod
    def norm_names() -> list[str]:
        return [f.name for f in fields(ErrorReport)][1:]

    def norms(self) -> tuple[float, ...]:
        return astuple(self)[1:]


def _integral(grid: GridSpec, *arrays) -> float:
    return float(sum(np.sum(a) for a in arrays) * grid.cell_volume)


def _l2(grid: GridSpec, *arrays) -> float:
    return float(np.sqrt(_integral(grid, *(a * a for a in arrays))))


def _kinetic(grid, u, v) -> float:
    ub = average_u_to_cell(grid, u)
    vb = average_v_to_cell(grid, v)
    return 0.5 * _integral(grid, ub * ub + vb * vb)


def _gradient_energy(grid, f, gamma) -> float:
    gx, gy = st.grad_c_to_faces(grid, f)
    return 0.5 * gamma * _integral(grid, gx * gx, gy * gy)


def energy_nsch(state: NschState, gamma: float) -> EnergyRecord:
    """Discrete Helmholtz energy: kinetic, double-well and gradient parts."""
    g = state.grid
    kin = _kinetic(g, state.u, state.v)
    well = _integral(g, st.double_well(state.c))
    grad = _gradient_energy(g, state.c, gamma)
    return EnergyRecord(state.t, kin + well + grad, kin, well, grad)


def energy_relax(state: RelaxState, params: RelaxParams) -> EnergyRecord:
    """Relaxation energy; the gradient part uses ``omega`` instead of ``c``."""
    g = state.grid
    kin = _kinetic(g, state.u, state.v)
    well = _integral(g, st.double_well(state.c))
    grad = _gradient_energy(g, state.omega, params.gamma)
    pen = _integral(g, (state.c - state.omega) ** 2) / (2.0 * params.beta)
    pres = 0.5 * params.alpha * _integral(g, state.p ** 2)
    flux = 0.5 * params.delta * _integral(g, state.mx ** 2, state.my ** 2)
    return EnergyRecord(state.t, kin + well + grad + pen + pres + flux,
                        kin, well, grad, pen, pres, flux)


def quartic_excess(c, cbar):
    """``c^4 - cbar^4 - 4 cbar^3 (c - cbar)``, bounded below by ``(2 - sqrt 3)(c - cbar)^4``."""
    return c ** 4 - cbar ** 4 - 4.0 * cbar ** 3 * (c - cbar)


def reduced_relative_energy_density(
    grid: GridSpec,
    relax: RelaxState,
    ref: NschState,
    K: EllipticOperator,
    params: RelaxParams,
) -> tuple[np.ndarray, np.ndarray]:
    """Cell and face densities of the reduced relative energy.

    The reference is lifted to relaxation variables by ``omega_bar = K^{-1} c_bar``,
    ``m_bar = -grad mu(c_bar)`` and ``e_bar = grad c_bar``; ``e = grad omega``.
    """
    grid.check(relax.c, ref.c)
    a, b, d, gam = params.alpha, params.beta, params.delta, params.gamma
    c, cb = relax.c, ref.c
    omega_bar = K.solve(cb)
    cell = (
        0.5 * a * (relax.p - ref.p) ** 2
        + 0.25 * quartic_excess(c, cb)
        + (c - relax.omega - (cb - omega_bar)) ** 2 / (2.0 * b)
        + 0.5 * (c - cb) ** 2
    )
    mbx, mby = st.chem_potential_grad(grid, cb, gam)
    ex, ey = st.grad_c_to_faces(grid, relax.omega)
    ebx, eby = st.grad_c_to_faces(grid, cb)
    face = (
        0.5 * ((relax.u - ref.u) ** 2 + (relax.v - ref.v) ** 2)
        + 0.5 * d * ((relax.mx + mbx) ** 2 + (relax.my + mby) ** 2)
        + 0.5 * gam * ((ex - ebx) ** 2 + (ey - eby) ** 2)
    )
    return cell, face


def reduced_relative_energy(relax: RelaxState, ref: NschState, K: EllipticOperator,
                            params: RelaxParams) -> float:
    g = relax.grid
    cell, face = reduced_relative_energy_density(g, relax, ref, K, params)
    return _integral(g, cell, face)


def error_report(relax: RelaxState, ref: NschState, params: RelaxParams) -> ErrorReport:
    """Weighted norms comparing a relaxation state with an NSCH reference at one time."""
    g = relax.grid
    if ref.grid != g:
        raise ValueError("states live on different grids")
    if not np.isclose(relax.t, ref.t, rtol=0.0, atol=1e-9 * max(1.0, abs(ref.t))):
        raise ValueError(f"states at different times: {relax.t} vs {ref.t}")
    a, b, d, gam = params.alpha, params.beta, params.delta, params.gamma
    dc = relax.c - ref.c
    mux, muy = st.chem_potential_grad(g, ref.c, gam)
    wx, wy = st.grad_c_to_faces(g, relax.omega)
    cx, cy = st.grad_c_to_faces(g, ref.c)
    pen = (relax.c - relax.omega) / b + gam * st.laplacian_cells(g, ref.c)
    return ErrorReport(
        t=relax.t,
        p_err=np.sqrt(a) * _l2(g, relax.p - ref.p),
        c_err=_l2(g, dc),
        c_sq_err=_l2(g, dc * dc),
        penalty_err=np.sqrt(b) * _l2(g, pen),
        u_err=_l2(g, relax.u - ref.u, relax.v - ref.v),
        flux_err=np.sqrt(d) * _l2(g, relax.mx + mux, relax.my + muy),
        grad_err=np.sqrt(gam) * _l2(g, wx - cx, wy - cy),
    )


def mass(grid: GridSpec, c) -> float:
    return _integral(grid, c)


def divergence_inf(grid: GridSpec, u, v) -> float:
    return float(np.max(np.abs(st.div_faces_to_cells(grid, u, v))))


def overshoot(c) -> float:
    """Amount by which ``max |c|`` exceeds the pure-phase value 1."""
    return max(0.0, float(np.max(np.abs(c))) - 1.0)
