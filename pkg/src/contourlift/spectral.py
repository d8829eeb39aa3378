"""Spectral solver for the modified Helmholtz equation under Neumann boundaries.

The discrete operator is ``laplacian(u) - lam*u`` with the exact-adjoint
stencils from :mod:`contourlift.fields`.  Along each axis that Laplacian is the
symmetric second-difference matrix with [-1, 1] rows at the ends, which the
orthonormal DCT-II diagonalizes: eigenvalue -sigma_k^2 for mode k, with

    sigma_k = 2 sin(pi * k / (2 * N)),   k = 0 .. N-1   (sigma_0 = 0).

We use scipy's type-2 DCT with norm="ortho" in both directions, so the
transform is orthogonal (Parseval holds) and a constant field c on an N x N
grid has the single coefficient c*N at mode (0, 0).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.fft import dctn, idctn

from .fields import Grid2D


def _axis_sigma(n: int) -> np.ndarray:
    return 2.0 * np.sin(0.5 * np.pi * np.arange(n) / n)


@dataclass(frozen=True)
class SpectralPlan:
    """Precomputed mode frequencies for one grid size."""

    grid: Grid2D
    sigma_x: np.ndarray = field(repr=False)
    sigma_y: np.ndarray = field(repr=False)
    mode_sum: np.ndarray = field(repr=False)  # sigma_x^2 + sigma_y^2, shape (ny, nx)

    @classmethod
    def for_grid(cls, grid: Grid2D) -> "SpectralPlan":
        sx = _axis_sigma(grid.nx)
        sy = _axis_sigma(grid.ny)
        mode_sum = sy[:, None] ** 2 + sx[None, :] ** 2
        return cls(grid=grid, sigma_x=sx, sigma_y=sy, mode_sum=mode_sum)


def dct2_forward(f: np.ndarray, plan: SpectralPlan) -> np.ndarray:
    if f.shape != plan.grid.shape:
        raise ValueError(f"field shape {f.shape} does not match grid {plan.grid.shape}")
    return dctn(f, type=2, norm="ortho")


def dct2_inverse(coeff: np.ndarray, plan: SpectralPlan) -> np.ndarray:
    if coeff.shape != plan.grid.shape:
        raise ValueError(f"coefficient shape {coeff.shape} does not match grid {plan.grid.shape}")
    return idctn(coeff, type=2, norm="ortho")


def mode_multiplier(plan: SpectralPlan, lam: float) -> np.ndarray:
    """Diagonal symbol of (laplacian - lam*Id) in the DCT basis: -(sigma^2 + lam)."""
    return -(plan.mode_sum + lam)


def solve_modified_helmholtz(rhs: np.ndarray, lam: float, plan: SpectralPlan) -> np.ndarray:
    """Solve laplacian(u) - lam*u = rhs exactly in the DCT basis.

    Requires lam > 0 so the symbol is bounded away from zero (at lam = 0 the
    operator is singular on constants).
    """
    if not lam > 0.0:
        raise ValueError(f"modified Helmholtz shift must be positive, got {lam}")
    coeff = dct2_forward(rhs, plan)
    coeff /= mode_multiplier(plan, lam)
    return dct2_inverse(coeff, plan)
