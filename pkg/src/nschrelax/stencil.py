"""Finite-difference stencils on the periodic MAC layout.

Every function takes the grid first and returns freshly allocated arrays in
the layouts described in :mod:`nschrelax.grid`.  In 1D (``ny == 1``) all
y-direction contributions are skipped, never evaluated on a one-cell wrap.

Notation: ``_sh(f, di, dj)[j, i] == f[j + dj, i + di]`` (periodic).
"""

from __future__ import annotations

import numpy as np

from .grid import CellField, FaceFieldX, FaceFieldY, GridSpec

__all__ = [
    "double_well",
    "double_well_prime",
    "double_well_second",
    "grad_c_to_faces",
    "interp_c_to_faces",
    "interp_wpp_to_faces",
    "grad_lap_to_faces",
    "div_faces_to_cells",
    "div_cu_to_cells",
    "laplacian_cells",
    "convect",
    "convect_u",
    "grad_p_to_faces",
    "nonconservative_divu_u",
    "chem_potential_grad",
]


def double_well(c):
    return 0.25 * (c * c - 1.0) ** 2


def double_well_prime(c):
    return c ** 3 - c


def double_well_second(c):
    return 3.0 * c * c - 1.0


def _sh(f: np.ndarray, di: int = 0, dj: int = 0) -> np.ndarray:
    if di:
        f = np.roll(f, -di, axis=1)
    if dj:
        f = np.roll(f, -dj, axis=0)
    return f


def _face_gradient(c, dx, axis):
    # Weights (1, -15, 15, -1) / 12 on c_{i-1}, c_i, c_{i+1}, c_{i+2}.
    if axis == 1:
        cm, cp, cpp = _sh(c, -1), _sh(c, 1), _sh(c, 2)
    else:
        cm, cp, cpp = _sh(c, 0, -1), _sh(c, 0, 1), _sh(c, 0, 2)
    return (cm - 15.0 * c + 15.0 * cp - cpp) / (12.0 * dx)


def grad_c_to_faces(grid: GridSpec, c: CellField) -> tuple[FaceFieldX, FaceFieldY]:
    """Four-point face gradient of a cell field.

    x-face value: ``(c_{i-1} - 15 c_i + 15 c_{i+1} - c_{i+2}) / (12 dx)``.
    The outer weights and denominator match the compact interpolation
    family; the inner weight is fixed by consistency (first moment one).
    """
    grid.check(c)
    gx = _face_gradient(c, grid.dx, axis=1)
    gy = np.zeros_like(c) if grid.is_1d else _face_gradient(c, grid.dy, axis=0)
    return gx, gy


def _interp(f, axis):
    if axis == 1:
        fm, fp, fpp = _sh(f, -1), _sh(f, 1), _sh(f, 2)
    else:
        fm, fp, fpp = _sh(f, 0, -1), _sh(f, 0, 1), _sh(f, 0, 2)
    return (-fm + 7.0 * f + 7.0 * fp - fpp) / 12.0


def interp_c_to_faces(grid: GridSpec, c: CellField) -> tuple[FaceFieldX, FaceFieldY]:
    """Compact interpolation ``(-c_{i-1} + 7 c_i + 7 c_{i+1} - c_{i+2}) / 12``."""
    grid.check(c)
    cx = _interp(c, axis=1)
    cy = np.zeros_like(c) if grid.is_1d else _interp(c, axis=0)
    return cx, cy


def interp_wpp_to_faces(grid: GridSpec, c: CellField) -> tuple[FaceFieldX, FaceFieldY]:
    """W''(c) evaluated at cell centers, then interpolated to both face families."""
    return interp_c_to_faces(grid, double_well_second(c))


def grad_lap_to_faces(grid: GridSpec, f: CellField) -> tuple[FaceFieldX, FaceFieldY]:
    """Face values of the gradient of the Laplacian.

    The x-face value combines the third difference in x with a six-point
    mixed stencil for ``d^3 f / dx dy^2``; the y-face value is its mirror.
    """
    grid.check(f)
    dx, dy = grid.dx, grid.dy
    fxm, fxp, fxpp = _sh(f, -1), _sh(f, 1), _sh(f, 2)
    gx = (-fxm + 3.0 * f - 3.0 * fxp + fxpp) / dx ** 3
    if grid.is_1d:
        return gx, np.zeros_like(f)

    fym, fyp, fypp = _sh(f, 0, -1), _sh(f, 0, 1), _sh(f, 0, 2)
    gx += (
        -fym + _sh(f, 1, -1) + 2.0 * f - 2.0 * fxp - fyp + _sh(f, 1, 1)
    ) / (dx * dy * dy)
    gy = (-fym + 3.0 * f - 3.0 * fyp + fypp) / dy ** 3
    gy += (
        -fxm + _sh(f, -1, 1) + 2.0 * f - 2.0 * fyp - fxp + _sh(f, 1, 1)
    ) / (dx * dx * dy)
    return gx, gy


def div_faces_to_cells(grid: GridSpec, fx: FaceFieldX, fy: FaceFieldY) -> CellField:
    """Central divergence of a face-staggered vector field."""
    grid.check(fx, fy)
    d = (fx - _sh(fx, -1)) / grid.dx
    if not grid.is_1d:
        d = d + (fy - _sh(fy, 0, -1)) / grid.dy
    return d


def div_cu_to_cells(grid: GridSpec, c: CellField, u: FaceFieldX, v: FaceFieldY) -> CellField:
    """Conservative transport divergence ``div(c u)``.

    The cell product ``c_{ij} * ubar_{ij}`` (``ubar`` the two-point cell
    average of the face velocity) is averaged back to faces and differenced.
    """
    grid.check(c, u, v)
    cu = c * 0.5 * (u + _sh(u, -1))
    fx = 0.5 * (cu + _sh(cu, 1))
    d = (fx - _sh(fx, -1)) / grid.dx
    if not grid.is_1d:
        cv = c * 0.5 * (v + _sh(v, 0, -1))
        fy = 0.5 * (cv + _sh(cv, 0, 1))
        d = d + (fy - _sh(fy, 0, -1)) / grid.dy
    return d


def laplacian_cells(grid: GridSpec, f: CellField) -> CellField:
    """Five-point periodic Laplacian (three-point in 1D)."""
    grid.check(f)
    lap = (_sh(f, -1) - 2.0 * f + _sh(f, 1)) / grid.dx ** 2
    if not grid.is_1d:
        lap = lap + (_sh(f, 0, -1) - 2.0 * f + _sh(f, 0, 1)) / grid.dy ** 2
    return lap


def advecting_v_at_xfaces(grid: GridSpec, v: FaceFieldY) -> FaceFieldX:
    """Four-point average of the y-velocity onto x-faces."""
    return 0.25 * (_sh(v, 0, -1) + _sh(v, 1, -1) + v + _sh(v, 1))


def advecting_u_at_yfaces(grid: GridSpec, u: FaceFieldX) -> FaceFieldY:
    """Four-point average of the x-velocity onto y-faces."""
    return 0.25 * (_sh(u, -1) + u + _sh(u, -1, 1) + _sh(u, 0, 1))


def convect(
    grid: GridSpec,
    u: FaceFieldX,
    v: FaceFieldY,
    u_adv: FaceFieldX,
    v_adv: FaceFieldY,
) -> tuple[FaceFieldX, FaceFieldY]:
    """Momentum flux divergence ``div(w (x) a)`` with ``w = (u, v)`` transported by ``a``.

    Linear in ``(u, v)`` for a frozen advecting field ``(u_adv, v_adv)``;
    :func:`convect_u` is the quadratic case ``a = w``.
    """
    grid.check(u, v, u_adv, v_adv)
    dx, dy = grid.dx, grid.dy

    # x-momentum at (i+1/2, j): cell products are averages of face products.
    uu = 0.5 * (u * u_adv + _sh(u * u_adv, -1))
    cx = (_sh(uu, 1) - uu) / dx
    if grid.is_1d:
        return cx, np.zeros_like(v)

    # Corner (i+1/2, j+1/2) products stored at [j, i].
    w = u * advecting_v_at_xfaces(grid, v_adv)
    corner = 0.5 * (w + _sh(w, 0, 1))
    cx = cx + (corner - _sh(corner, 0, -1)) / dy

    vv = 0.5 * (v * v_adv + _sh(v * v_adv, 0, -1))
    cy = (_sh(vv, 0, 1) - vv) / dy
    z = v * advecting_u_at_yfaces(grid, u_adv)
    corner = 0.5 * (z + _sh(z, 1))
    cy = cy + (corner - _sh(corner, -1)) / dx
    return cx, cy


def convect_u(grid: GridSpec, u: FaceFieldX, v: FaceFieldY) -> tuple[FaceFieldX, FaceFieldY]:
    return convect(grid, u, v, u, v)


def grad_p_to_faces(grid: GridSpec, p: CellField) -> tuple[FaceFieldX, FaceFieldY]:
    """Two-point face gradient, the negative adjoint of :func:`div_faces_to_cells`."""
    grid.check(p)
    gx = (_sh(p, 1) - p) / grid.dx
    gy = np.zeros_like(p) if grid.is_1d else (_sh(p, 0, 1) - p) / grid.dy
    return gx, gy


def nonconservative_divu_u(grid: GridSpec, u: FaceFieldX, v: FaceFieldY) -> tuple[FaceFieldX, FaceFieldY]:
    """Face values of ``(div u) u`` with the divergence averaged to faces."""
    d = div_faces_to_cells(grid, u, v)
    rx = 0.5 * (_sh(d, 1) + d) * u
    ry = np.zeros_like(v) if grid.is_1d else 0.5 * (_sh(d, 0, 1) + d) * v
    return rx, ry


def chem_potential_grad(
    grid: GridSpec,
    c: CellField,
    gamma: float,
    wpp_source: CellField | None = None,
    lap_source: CellField | None = None,
) -> tuple[FaceFieldX, FaceFieldY]:
    """Discrete ``grad mu = W''(c) grad c - gamma grad lap c`` at faces.

    ``wpp_source`` freezes the field at which W'' is evaluated and
    ``lap_source`` replaces ``c`` in the third-order term (the relaxation
    variable in the relaxed system); both default to ``c``.
    """
    wx, wy = interp_wpp_to_faces(grid, c if wpp_source is None else wpp_source)
    gx, gy = grad_c_to_faces(grid, c)
    tx, ty = grad_lap_to_faces(grid, c if lap_source is None else lap_source)
    return wx * gx - gamma * tx, wy * gy - gamma * ty
