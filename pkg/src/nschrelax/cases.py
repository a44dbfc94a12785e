"""Initial data and default settings of the benchmark problems."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from .grid import GridSpec

CASE_IDS = ("ostwald1d", "bubble2d", "merging2d", "collision2d")

OSTWALD_CENTERS = (0.3, 0.75)
OSTWALD_RADII = (0.12, 0.06)
MERGING_CENTERS = ((0.4, 0.5), (0.7, 0.5))
MERGING_RADII = (0.2, 0.1)
COLLISION_CENTERS = ((0.5, 0.7), (0.5, 0.3))
COLLISION_RADII = (0.15, 0.15)


@dataclass(frozen=True)
class CaseSpec:
    id: str
    grid: GridSpec
    gamma: float
    dt: float = 1e-3
    t_end: float = 0.25
    extra: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.id not in CASE_IDS:
            raise ValueError(f"unknown case id {self.id!r}; expected one of {CASE_IDS}")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if not (self.gamma > 0 and self.dt > 0):
            raise ValueError("gamma and dt must be positive")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def with_grid(self, nx: int, ny: int | None = None) -> "CaseSpec":
        ny = self.grid.ny if ny is None else ny
        return replace(self, grid=replace(self.grid, nx=nx, ny=ny))


def _need_1d(grid: GridSpec):
    if not grid.is_1d:
        raise ValueError("this case is one-dimensional; use ny = 1")


def _need_2d(grid: GridSpec):
    if grid.is_1d:
        raise ValueError("this case is two-dimensional; use ny >= 4")


def init_ostwald1d(grid: GridSpec, gamma: float = 1e-3):
    """Two bubbles of unequal size; the smaller one dissolves into the larger."""
    _need_1d(grid)
    x, _ = grid.cell_centers()
    w = np.sqrt(2.0 * gamma)
    c = -1.0 + sum(np.tanh((np.abs(x - xi) - ri) / w)
                   for xi, ri in zip(OSTWALD_CENTERS, OSTWALD_RADII))
    return c, grid.zeros()


def init_bubble2d(grid: GridSpec):
    """``-cos(2 pi r)`` inside ``r <= 1/2`` around the domain center, 1 outside."""
    _need_2d(grid)
    x, y = grid.cell_centers()
    r = np.hypot(x - 0.5, y - 0.5)
    c = np.where(r <= 0.5, -np.cos(2.0 * np.pi * r), 1.0)
    return c, grid.zeros(), grid.zeros()


def droplets(x, y, centers, radii, gamma: float):
    """Sum of tanh droplet profiles on a background of -1."""
    s = np.sqrt(2.0 * gamma)
    c = -1.0 * np.ones_like(x)
    for (xc, yc), r0 in zip(centers, radii):
        r = np.hypot(x - xc, y - yc)
        c = c - np.tanh((r - r0) / s) + np.tanh((r + r0) / s)
    return c


def init_merging2d(grid: GridSpec, gamma: float = 6e-3):
    _need_2d(grid)
    x, y = grid.cell_centers()
    c = droplets(x, y, MERGING_CENTERS, MERGING_RADII, gamma)
    return c, grid.zeros(), grid.zeros()


def collision_velocity(grid: GridSpec):
    """``(sin 2pi x cos 2pi y, cos 2pi x sin 2pi y)`` sampled at face midpoints.

    Note this field is not solenoidal: its divergence is ``4 pi cos cos``.
    """
    xu, yu = grid.xface_centers()
    xv, yv = grid.yface_centers()
    tp = 2.0 * np.pi
    return np.sin(tp * xu) * np.cos(tp * yu), np.cos(tp * xv) * np.sin(tp * yv)


def init_collision2d(grid: GridSpec, gamma: float = 1e-3):
    _need_2d(grid)
    x, y = grid.cell_centers()
    c = droplets(x, y, COLLISION_CENTERS, COLLISION_RADII, gamma)
    u, v = collision_velocity(grid)
    return c, u, v


def default_run(case_id: str) -> CaseSpec:
    """Default grid, capillarity, time step and end time of a benchmark."""
    if case_id == "ostwald1d":
        return CaseSpec(case_id, GridSpec(100), gamma=1e-3, dt=1e-3, t_end=0.3,
                        extra={"centers": OSTWALD_CENTERS, "radii": OSTWALD_RADII})
    grid = GridSpec(25, 25)
    if case_id == "bubble2d":
        return CaseSpec(case_id, grid, gamma=6e-3, dt=1e-3, t_end=0.25)
    if case_id == "merging2d":
        return CaseSpec(case_id, grid, gamma=6e-3, dt=1e-3, t_end=0.25,
                        extra={"centers": MERGING_CENTERS, "radii": MERGING_RADII})
    if case_id == "collision2d":
        return CaseSpec(case_id, grid, gamma=1e-3, dt=1e-3, t_end=0.25,
                        extra={"centers": COLLISION_CENTERS, "radii": COLLISION_RADII})
    raise ValueError(f"unknown case id {case_id!r}; expected one of {CASE_IDS}")


def initial_data(case: CaseSpec):
    """``(c0, u0, v0)`` for a case on its configured grid."""
    g = case.grid
    if case.id == "ostwald1d":
        c, u = init_ostwald1d(g, case.gamma)
        return c, u, g.zeros()
    if case.id == "bubble2d":
        return init_bubble2d(g)
    if case.id == "merging2d":
        return init_merging2d(g, case.gamma)
    return init_collision2d(g, case.gamma)
