"""Dense 2D grid fields and the finite-difference operators used everywhere else.

Array conventions:
  scalar field   float64, shape (ny, nx), entry [j, i] at cell (i, j)
  vector field   shape (2, ny, nx); component 0 points along x, 1 along y
  tensor field   shape (2, 2, ny, nx); entry [r, c] is the c-derivative of
                 vector component r, so ``jacobian(v)[r] == gradient(v[r])``

The gradient uses forward differences with a structural zero in the last
column (x) and last row (y).  The divergence is its exact negative adjoint,
i.e. <gradient(f), v> == -<f, divergence(v)> to roundoff, which makes
``-divergence(gradient(.))`` symmetric positive semidefinite with the
constant fields as kernel.  Grid spacing is fixed at 1; all difference
quotients are plain differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Grid2D:
    """Regular cell grid, nx columns by ny rows, unit spacing."""

    nx: int
    ny: int
    spacing: float = 1.0

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise ValueError(f"grid must be at least 2x2, got {self.nx}x{self.ny}")
        if self.spacing != 1.0:
            raise ValueError("only unit grid spacing is supported")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def size(self) -> int:
        return self.nx * self.ny

    def scalar(self) -> np.ndarray:
        return np.zeros(self.shape)

    def vector(self) -> np.ndarray:
        return np.zeros((2, self.ny, self.nx))

    def tensor(self) -> np.ndarray:
        return np.zeros((2, 2, self.ny, self.nx))

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        """Cell coordinate arrays (X, Y), each of shape (ny, nx)."""
        return np.meshgrid(np.arange(self.nx, dtype=float),
                           np.arange(self.ny, dtype=float))


def gradient(f: np.ndarray) -> np.ndarray:
    """Forward-difference gradient, zero where the forward neighbor is missing."""
    ny, nx = f.shape
    g = np.zeros((2, ny, nx))
    g[0, :, :-1] = f[:, 1:] - f[:, :-1]
    g[1, :-1, :] = f[1:, :] - f[:-1, :]
    return g


def divergence(v: np.ndarray) -> np.ndarray:
    """Exact negative adjoint of ``gradient``.

    Backward differences in the interior; on the first row/column the bare
    component, on the last its negated backward neighbor.  The last column of
    v[0] and last row of v[1] are ignored (the gradient is structurally zero
    there, so the adjoint has no coupling to them).
    """
    vx, vy = v[0], v[1]
    out = np.zeros_like(vx)
    out[:, 0] += vx[:, 0]
    out[:, 1:-1] += vx[:, 1:-1] - vx[:, :-2]
    out[:, -1] -= vx[:, -2]
    out[0, :] += vy[0, :]
    out[1:-1, :] += vy[1:-1, :] - vy[:-2, :]
    out[-1, :] -= vy[-2, :]
    return out


def jacobian(v: np.ndarray) -> np.ndarray:
    """Componentwise gradient of a vector field; rows are the gradients."""
    return np.stack([gradient(v[0]), gradient(v[1])])


def tensor_divergence(t: np.ndarray) -> np.ndarray:
    """Row-wise divergence of a 2x2 tensor field, adjoint to ``jacobian``."""
    return np.stack([divergence(t[0]), divergence(t[1])])


def laplacian(f: np.ndarray) -> np.ndarray:
    """divergence(gradient(f)): the 5-point Neumann Laplacian (negative semidefinite)."""
    return divergence(gradient(f))


def inner(a: np.ndarray, b: np.ndarray) -> float:
    """Flat Euclidean inner product over all components and cells."""
    return float(np.sum(a * b))


def norm2(a: np.ndarray) -> float:
    """Flat Euclidean norm over all components and cells."""
    return float(np.sqrt(np.sum(a * a)))


def cell_norm(v: np.ndarray) -> np.ndarray:
    """Per-cell Euclidean norm of a vector field, shape (ny, nx)."""
    return np.sqrt(v[0] * v[0] + v[1] * v[1])


def cell_fro_norm(t: np.ndarray) -> np.ndarray:
    """Per-cell Frobenius norm of a 2x2 tensor field, shape (ny, nx)."""
    return np.sqrt(np.sum(t * t, axis=(0, 1)))
