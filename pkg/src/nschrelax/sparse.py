"""Linear solvers for the semi-implicit steps.

``gmres_solve`` is a restarted GMRES (modified Gram-Schmidt Arnoldi, Givens
rotations) acting on a matrix-free :class:`LinearOperatorHandle`.  The
screened-Poisson operators that stay fixed for a whole run are factorized
once with a sparse LU and reused.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import matrices
from .grid import CellField, GridSpec

EPS = np.finfo(float).eps


class NonConvergence(RuntimeError):
    """GMRES did not reach the residual target within ``max_iters``."""

    def __init__(self, message: str, residual: float = np.nan, iters: int = 0):
        super().__init__(message)
        self.residual = residual
        self.iters = iters


class Breakdown(RuntimeError):
    """Arnoldi produced a zero vector while the residual is still nonzero."""


@dataclass
class LinearOperatorHandle:
    """Matrix-free linear map on ``R^n``.

    ``norm`` is an optional estimate of ``||A||_inf``; when given, GMRES also
    accepts iterates whose residual sits at the round-off floor
    ``16 eps ||A|| ||x||`` even if the relative target is not resolvable.
    """

    apply: Callable[[np.ndarray], np.ndarray]
    n: int
    norm: Optional[float] = None

    @classmethod
    def from_matrix(cls, A) -> "LinearOperatorHandle":
        A = sp.csr_matrix(A)
        nrm = float(abs(A).sum(axis=1).max()) if A.nnz else 0.0
        return cls(apply=lambda x: A @ x, n=A.shape[0], norm=nrm)


@dataclass
class KrylovConfig:
    tol: float = 1e-12
    max_iters: Optional[int] = None  # None means 10 * n
    restart: int = 30

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.restart < 1:
            raise ValueError("restart must be >= 1")
        if self.max_iters is not None and self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")

    def iteration_cap(self, n: int) -> int:
        return 10 * n if self.max_iters is None else self.max_iters


def _floor(A: LinearOperatorHandle, x: np.ndarray) -> float:
    if A.norm is None:
        return 0.0
    return 16.0 * EPS * A.norm * np.linalg.norm(x)


def gmres_solve(
    A: LinearOperatorHandle,
    b: np.ndarray,
    x0: Optional[np.ndarray] = None,
    cfg: Optional[KrylovConfig] = None,
    M: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    callback: Optional[Callable[[float], None]] = None,
) -> tuple[np.ndarray, float, int]:
    """Solve ``A x = b`` with restarted, optionally right-preconditioned GMRES.

    Parameters
    ----------
    A : LinearOperatorHandle
    b : ndarray, shape (n,)
    x0 : ndarray, optional
        Initial guess, zero by default.
    cfg : KrylovConfig, optional
    M : callable, optional
        Right preconditioner; GMRES runs on ``A M`` and returns ``x = M y``.
    callback : callable, optional
        Called with the relative residual estimate after every iteration.

    Returns
    -------
    x : ndarray
    residual : float
        Achieved relative residual ``||A x - b|| / ||b||`` (true residual).
    iters : int
        Total Arnoldi steps taken.

    Raises
    ------
    NonConvergence
        Target not met after ``cfg.max_iters`` steps.
    Breakdown
        Lucky-breakdown test fails with a residual that cannot be reduced.
    """
    cfg = cfg or KrylovConfig()
    n = A.n
    b = np.asarray(b, dtype=float).ravel()
    if b.shape != (n,):
        raise ValueError(f"rhs has length {b.size}, operator has dimension {n}")
    if not np.all(np.isfinite(b)):
        raise ValueError("rhs contains non-finite entries")
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n), 0.0, 0

    prec = M if M is not None else (lambda z: z)
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).ravel().copy()
    cap = cfg.iteration_cap(n)
    m = min(cfg.restart, n)
    iters = 0

    r = b - A.apply(x)
    rnorm = np.linalg.norm(r)
    while True:
        if rnorm <= cfg.tol * bnorm or rnorm <= _floor(A, x):
            return x, rnorm / bnorm, iters
        if iters >= cap:
            raise NonConvergence(
                f"GMRES stalled at relative residual {rnorm / bnorm:.3e} after {iters} iterations",
                rnorm / bnorm,
                iters,
            )

        V = np.zeros((m + 1, n))
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        V[0] = r / rnorm
        g[0] = rnorm
        k = 0
        exhausted = False  # Krylov space became invariant
        while k < m and iters < cap:
            w = A.apply(prec(V[k]))
            for i in range(k + 1):
                H[i, k] = np.dot(w, V[i])
                w -= H[i, k] * V[i]
            hk1 = np.linalg.norm(w)
            H[k + 1, k] = hk1
            colnorm = np.linalg.norm(H[: k + 2, k])
            for i in range(k):
                t = cs[i] * H[i, k] + sn[i] * H[i + 1, k]
                H[i + 1, k] = -sn[i] * H[i, k] + cs[i] * H[i + 1, k]
                H[i, k] = t
            denom = np.hypot(H[k, k], H[k + 1, k])
            if denom <= 1e-14 * colnorm:
                # A maps the new direction into the old Krylov space: singular.
                exhausted = True
                break
            cs[k], sn[k] = H[k, k] / denom, H[k + 1, k] / denom
            H[k, k] = denom
            H[k + 1, k] = 0.0
            g[k + 1] = -sn[k] * g[k]
            g[k] = cs[k] * g[k]
            iters += 1
            k += 1
            if callback is not None:
                callback(abs(g[k]) / bnorm)
            if hk1 <= 1e-14 * denom:
                exhausted = True
                break
            V[k] = w / hk1
            if abs(g[k]) <= cfg.tol * bnorm:
                break

        if k > 0:
            y = np.linalg.solve(np.triu(H[:k, :k]), g[:k])
            x = x + prec(V[:k].T @ y)
        r = b - A.apply(x)
        new_norm = np.linalg.norm(r)
        converged = new_norm <= cfg.tol * bnorm or new_norm <= _floor(A, x)
        if exhausted and not converged and new_norm > 0.5 * rnorm:
            raise Breakdown(
                f"GMRES breakdown with relative residual {new_norm / bnorm:.3e}"
            )
        rnorm = new_norm


class ScreenedPoisson:
    """``shift * I - coeff * Lap_h`` with a cached sparse LU factorization."""

    def __init__(self, grid: GridSpec, shift: float, coeff: float):
        if not shift > 0 or coeff < 0:
            raise ValueError("screened Poisson needs shift > 0 and coeff >= 0")
        self.grid = grid
        self.shift = float(shift)
        self.coeff = float(coeff)
        self.matrix = (
            self.shift * matrices.identity(grid) - self.coeff * matrices.laplacian(grid)
        ).tocsc()
        try:
            self._lu = spla.splu(self.matrix)
        except RuntimeError as exc:  # pragma: no cover - diagonal dominance forbids it
            raise RuntimeError(f"factorization of screened Poisson failed: {exc}") from exc

    def apply(self, f: CellField) -> CellField:
        self.grid.check(f)
        return (self.matrix @ f.ravel()).reshape(self.grid.shape)

    def solve(self, rhs: CellField) -> CellField:
        self.grid.check(rhs)
        return self._lu.solve(np.ascontiguousarray(rhs, dtype=float).ravel()).reshape(self.grid.shape)


@dataclass
class EllipticOperator:
    """``K = I - gamma * beta * Lap_h``, relating the relaxation variable to ``c``."""

    grid: GridSpec
    gamma: float
    beta: float
    _op: ScreenedPoisson = field(init=False, repr=False)

    def __post_init__(self):
        if not (self.gamma > 0 and self.beta > 0):
            raise ValueError("gamma and beta must be positive")
        self._op = ScreenedPoisson(self.grid, 1.0, self.gamma * self.beta)

    @property
    def matrix(self) -> sp.csc_matrix:
        return self._op.matrix

    def apply(self, f: CellField) -> CellField:
        return self._op.apply(f)

    def solve(self, rhs: CellField) -> CellField:
        return self._op.solve(rhs)


def build_elliptic(grid: GridSpec, gamma: float, beta: float) -> EllipticOperator:
    return EllipticOperator(grid, gamma, beta)


def elliptic_solve(K: EllipticOperator, rhs: CellField) -> CellField:
    """Return ``omega`` with ``K omega = rhs``."""
    return K.solve(rhs)


class PeriodicPoisson:
    """Solver for ``Lap_h p = f`` on the periodic grid with mean-zero gauge.

    The periodic Laplacian has the constants as its null space.  Row 0 is
    replaced by a pin ``p_0 = 0``; for compatible data (zero mean) this
    yields a solution of the full system, which is then shifted to mean zero.
    """

    def __init__(self, grid: GridSpec):
        self.grid = grid
        L = matrices.laplacian(grid).tolil()
        L[0, :] = 0.0
        L[0, 0] = 1.0
        self._lu = spla.splu(L.tocsc())

    def solve(self, rhs: CellField) -> CellField:
        self.grid.check(rhs)
        f = np.array(rhs, dtype=float).ravel()
        f -= f.mean()
        f[0] = 0.0
        p = self._lu.solve(f)
        p -= p.mean()
        return p.reshape(self.grid.shape)


def solve_with_direct_preconditioner(
    apply: Callable[[np.ndarray], np.ndarray],
    matrix: sp.spmatrix,
    rhs: np.ndarray,
    x0: Optional[np.ndarray],
    cfg: KrylovConfig,
    M: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> tuple[np.ndarray, float, int]:
    """GMRES on a matrix-free operator, right-preconditioned by an LU of ``matrix``.

    ``matrix`` is the assembled counterpart of ``apply`` (or, when ``M`` is
    supplied explicitly, only used for the ``||A||`` estimate).
    """
    A = sp.csr_matrix(matrix)
    norm = float(abs(A).sum(axis=1).max())
    if M is None:
        M = spla.splu(A.tocsc()).solve
    handle = LinearOperatorHandle(apply=apply, n=A.shape[0], norm=norm)
    return gmres_solve(handle, rhs, x0, cfg, M=M)
