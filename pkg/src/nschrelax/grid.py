"""Periodic marker-and-cell grid geometry.

All fields are stored as ``numpy`` arrays of shape ``(ny, nx)`` in row-major
order, so the flat index of ``(i, j)`` is ``j * nx + i``.  Three layouts share
this storage:

* cell fields: value ``[j, i]`` sits at the cell center ``(x_i, y_j)``;
* x-face fields: value ``[j, i]`` sits at the east face ``(x_{i+1/2}, y_j)``;
* y-face fields: value ``[j, i]`` sits at the north face ``(x_i, y_{j+1/2})``.

Periodicity identifies face ``n + 1/2`` with face ``1/2``, so there are as
many faces as cells in each family and no ghost layers.  A run with
``ny == 1`` is one-dimensional; y-face fields are then identically zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Type aliases documenting which layout an array carries.
CellField = np.ndarray
FaceFieldX = np.ndarray
FaceFieldY = np.ndarray


def wrap(i: int, n: int) -> int:
    """Map a signed index onto ``[0, n)`` with periodic wrap-around."""
    if n < 1:
        raise ValueError(f"extent must be positive, got {n}")
    return ((i % n) + n) % n


@dataclass(frozen=True)
class GridSpec:
    """Equispaced periodic MAC grid on ``(xmin, xmax) x (ymin, ymax)``."""

    nx: int
    ny: int = 1
    xmin: float = 0.0
    xmax: float = 1.0
    ymin: float = 0.0
    ymax: float = 1.0

    def __post_init__(self):
        if self.nx < 4:
            raise ValueError(f"nx must be >= 4, got {self.nx}")
        if not (self.ny == 1 or self.ny >= 4):
            raise ValueError(f"ny must be 1 or >= 4, got {self.ny}")
        if not self.xmax > self.xmin:
            raise ValueError("xmax must exceed xmin")
        if self.ny > 1 and not self.ymax > self.ymin:
            raise ValueError("ymax must exceed ymin")

    @property
    def is_1d(self) -> bool:
        return self.ny == 1

    @property
    def dx(self) -> float:
        return (self.xmax - self.xmin) / self.nx

    @property
    def dy(self) -> float:
        if self.is_1d:
            return 1.0
        return (self.ymax - self.ymin) / self.ny

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def size(self) -> int:
        return self.nx * self.ny

    @property
    def cell_volume(self) -> float:
        return self.dx * self.dy

    def index(self, i: int, j: int = 0) -> int:
        """Flat row-major index of cell ``(i, j)``, wrapping periodically."""
        return wrap(j, self.ny) * self.nx + wrap(i, self.nx)

    def cell_center(self, i: int, j: int = 0) -> tuple[float, float]:
        if not (0 <= i < self.nx and 0 <= j < self.ny):
            raise IndexError(f"cell ({i}, {j}) outside {self.nx}x{self.ny} grid")
        return (self.xmin + (i + 0.5) * self.dx, self.ymin + (j + 0.5) * self.dy)

    def _axes(self, x_offset: float, y_offset: float):
        x = self.xmin + (np.arange(self.nx) + x_offset) * self.dx
        y = self.ymin + (np.arange(self.ny) + y_offset) * self.dy
        return np.meshgrid(x, y)

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinates ``(X, Y)`` of all cell centers, each of shape ``(ny, nx)``."""
        return self._axes(0.5, 0.5)

    def xface_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinates of the east-face midpoints ``(x_{i+1/2}, y_j)``."""
        return self._axes(1.0, 0.5)

    def yface_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinates of the north-face midpoints ``(x_i, y_{j+1/2})``."""
        return self._axes(0.5, 1.0)

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)

    def check(self, *fields: np.ndarray) -> None:
        """Reject arrays that do not match this grid's storage shape."""
        for f in fields:
            if np.shape(f) != self.shape:
                raise ValueError(
                    f"field of shape {np.shape(f)} does not live on grid {self.shape}"
                )


def average_u_to_cell(grid: GridSpec, u: FaceFieldX) -> CellField:
    """Cell-centered average ``(u_{i+1/2} + u_{i-1/2}) / 2`` of an x-face field."""
    grid.check(u)
    return 0.5 * (u + np.roll(u, 1, axis=1))


def average_v_to_cell(grid: GridSpec, v: FaceFieldY) -> CellField:
    """Cell-centered average of a y-face field; zero in 1D."""
    grid.check(v)
    if grid.is_1d:
        return np.zeros_like(v)
    return 0.5 * (v + np.roll(v, 1, axis=0))
