"""Sparse-matrix counterparts of the stencils in :mod:`nschrelax.stencil`.

Fields are flattened row-major (``f.ravel()``), so the matrices act on
vectors of length ``nx * ny``.  Each assembled operator must agree with its
stencil to round-off; the test-suite checks both routes against each other.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .grid import GridSpec
from .stencil import advecting_u_at_yfaces, advecting_v_at_xfaces, double_well_second


@lru_cache(maxsize=64)
def shift(grid: GridSpec, di: int = 0, dj: int = 0) -> sp.csr_matrix:
    """Periodic shift ``(S f)[j, i] = f[j + dj, i + di]``."""
    j, i = np.divmod(np.arange(grid.size), grid.nx)
    cols = ((j + dj) % grid.ny) * grid.nx + (i + di) % grid.nx
    data = np.ones(grid.size)
    return sp.csr_matrix((data, (np.arange(grid.size), cols)), shape=(grid.size, grid.size))


def identity(grid: GridSpec) -> sp.csr_matrix:
    return sp.identity(grid.size, format="csr")


def _zero(grid: GridSpec) -> sp.csr_matrix:
    return sp.csr_matrix((grid.size, grid.size))


def grad_c(grid: GridSpec) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    def one(d, h):
        s = lambda k: shift(grid, *(k * d))
        return (s(-1) - 15.0 * s(0) + 15.0 * s(1) - s(2)) / (12.0 * h)

    gx = one(np.array([1, 0]), grid.dx)
    gy = _zero(grid) if grid.is_1d else one(np.array([0, 1]), grid.dy)
    return gx.tocsr(), gy.tocsr()


def interp(grid: GridSpec) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    def one(d):
        s = lambda k: shift(grid, *(k * d))
        return (-s(-1) + 7.0 * s(0) + 7.0 * s(1) - s(2)) / 12.0

    ix = one(np.array([1, 0]))
    iy = _zero(grid) if grid.is_1d else one(np.array([0, 1]))
    return ix.tocsr(), iy.tocsr()


def grad_lap(grid: GridSpec) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    s = lambda di, dj=0: shift(grid, di, dj)
    dx, dy = grid.dx, grid.dy
    gx = (-s(-1) + 3.0 * s(0) - 3.0 * s(1) + s(2)) / dx ** 3
    if grid.is_1d:
        return gx.tocsr(), _zero(grid)
    gx = gx + (
        -s(0, -1) + s(1, -1) + 2.0 * s(0) - 2.0 * s(1) - s(0, 1) + s(1, 1)
    ) / (dx * dy * dy)
    gy = (-s(0, -1) + 3.0 * s(0) - 3.0 * s(0, 1) + s(0, 2)) / dy ** 3
    gy = gy + (
        -s(-1) + s(-1, 1) + 2.0 * s(0) - 2.0 * s(0, 1) - s(1) + s(1, 1)
    ) / (dx * dx * dy)
    return gx.tocsr(), gy.tocsr()


def div(grid: GridSpec) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Backward differences mapping face families to cells."""
    dx_ = (identity(grid) - shift(grid, -1)) / grid.dx
    dy_ = _zero(grid) if grid.is_1d else (identity(grid) - shift(grid, 0, -1)) / grid.dy
    return dx_.tocsr(), dy_.tocsr()


def grad_p(grid: GridSpec) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Forward differences mapping cells to face families."""
    gx = (shift(grid, 1) - identity(grid)) / grid.dx
    gy = _zero(grid) if grid.is_1d else (shift(grid, 0, 1) - identity(grid)) / grid.dy
    return gx.tocsr(), gy.tocsr()


def laplacian(grid: GridSpec) -> sp.csr_matrix:
    dx_, dy_ = div(grid)
    gx, gy = grad_p(grid)
    return (dx_ @ gx + dy_ @ gy).tocsr()


def biharmonic(grid: GridSpec) -> sp.csr_matrix:
    """``div o grad_lap`` as a cell-to-cell matrix."""
    dx_, dy_ = div(grid)
    gx, gy = grad_lap(grid)
    return (dx_ @ gx + dy_ @ gy).tocsr()


def div_cu(grid: GridSpec, u: np.ndarray, v: np.ndarray) -> sp.csr_matrix:
    """Matrix of ``c -> div_cu_to_cells(c, u, v)`` for frozen velocities."""
    I = identity(grid)
    dx_, dy_ = div(grid)
    ubar = 0.5 * (u + np.roll(u, 1, axis=1))
    op = dx_ @ ((I + shift(grid, 1)) * 0.5) @ sp.diags(ubar.ravel())
    if not grid.is_1d:
        vbar = 0.5 * (v + np.roll(v, 1, axis=0))
        op = op + dy_ @ ((I + shift(grid, 0, 1)) * 0.5) @ sp.diags(vbar.ravel())
    return op.tocsr()


def weighted_diffusion(grid: GridSpec, wpp_source: np.ndarray) -> sp.csr_matrix:
    """Matrix of ``c -> div(W''(wpp_source) grad c)`` with face-interpolated W''."""
    wpp = double_well_second(wpp_source).ravel()
    ix, iy = interp(grid)
    gx, gy = grad_c(grid)
    dx_, dy_ = div(grid)
    op = dx_ @ sp.diags(ix @ wpp) @ gx
    if not grid.is_1d:
        op = op + dy_ @ sp.diags(iy @ wpp) @ gy
    return op.tocsr()


def convection(grid: GridSpec, u_adv: np.ndarray, v_adv: np.ndarray) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Matrices of ``(u, v) -> convect(u, v, u_adv, v_adv)``; the components decouple."""
    I = identity(grid)
    s = lambda di, dj=0: shift(grid, di, dj)
    px = (s(1) - I) / grid.dx
    cx = px @ ((I + s(-1)) * 0.5) @ sp.diags(u_adv.ravel())
    if grid.is_1d:
        return cx.tocsr(), _zero(grid)
    vx = advecting_v_at_xfaces(grid, v_adv).ravel()
    cx = cx + ((I - s(0, -1)) / grid.dy) @ ((I + s(0, 1)) * 0.5) @ sp.diags(vx)

    py = (s(0, 1) - I) / grid.dy
    cy = py @ ((I + s(0, -1)) * 0.5) @ sp.diags(v_adv.ravel())
    uy = advecting_u_at_yfaces(grid, u_adv).ravel()
    cy = cy + ((I - s(-1)) / grid.dx) @ ((I + s(1)) * 0.5) @ sp.diags(uy)
    return cx.tocsr(), cy.tocsr()
