"""Matrix-free preconditioned conjugate gradients and the height-step operator.

The height subproblem of the splitting scheme needs solutions of

    -laplacian(I) + (2 * fidelity_weight / c_p) * I = rhs

which is symmetric positive definite whenever the fidelity weight is positive
somewhere.  The operator is applied matrix-free; the Jacobi preconditioner
uses its exact diagonal (the Laplacian center coefficient varies on the
boundary because of the one-sided stencils).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .fields import divergence, gradient


@dataclass
class PcgReport:
    iterations: int
    residual_history: list[float]
    converged: bool


def laplacian_diagonal(ny: int, nx: int) -> np.ndarray:
    """Diagonal of -divergence(gradient(.)): 4 inside, 3 on edges, 2 at corners."""
    dx = np.full(nx, 2.0)
    dx[0] = dx[-1] = 1.0
    dy = np.full(ny, 2.0)
    dy[0] = dy[-1] = 1.0
    return dy[:, None] + dx[None, :]


def build_height_operator(fidelity_weight: np.ndarray, c_p: float):
    """Return (apply, diagonal) for -laplacian + (2*fidelity_weight/c_p)*Id.

    ``fidelity_weight`` is the premasked per-cell fidelity coefficient (zero
    off the constrained cells).  It must be nonnegative and positive somewhere,
    otherwise the operator is singular on constants.
    """
    w = np.asarray(fidelity_weight, dtype=float)
    if np.any(w < 0.0):
        raise ValueError("fidelity weights must be nonnegative")
    if not np.any(w > 0.0):
        raise ValueError("fidelity weight is zero everywhere: height operator is singular")
    if c_p <= 0.0:
        raise ValueError(f"penalty c_p must be positive, got {c_p}")
    shift = 2.0 * w / c_p
    ny, nx = w.shape

    def apply(x: np.ndarray) -> np.ndarray:
        return -divergence(gradient(x)) + shift * x

    diag = laplacian_diagonal(ny, nx) + shift
    return apply, diag


def pcg(apply_operator: Callable[[np.ndarray], np.ndarray],
        rhs: np.ndarray,
        diag: np.ndarray | None = None,
        tol: float = 1e-8,
        max_iter: int | None = None,
        x0: np.ndarray | None = None) -> tuple[np.ndarray, PcgReport]:
    """Conjugate gradients with an optional Jacobi preconditioner.

    Stops when ||rhs - A x||_2 <= tol * ||rhs||_2.  Returns the best iterate
    seen (by residual norm) together with a report carrying the residual
    history, so callers can keep going with a usable field even when the
    iteration cap is hit.
    """
    b = np.asarray(rhs, dtype=float)
    if max_iter is None:
        max_iter = 10 * (b.shape[0] + b.shape[1])
    if diag is not None:
        diag = np.asarray(diag, dtype=float)
        if np.any(diag <= 0.0):
            raise ValueError("preconditioner diagonal must be strictly positive")

    b_norm = np.sqrt(np.sum(b * b))
    if b_norm == 0.0:
        return np.zeros_like(b), PcgReport(0, [0.0], True)

    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - apply_operator(x)
    z = r / diag if diag is not None else r
    p = z.copy()
    rz = np.sum(r * z)
    r_norm = np.sqrt(np.sum(r * r))
    history = [float(r_norm)]
    best_x, best_norm = x.copy(), r_norm
    target = tol * b_norm

    its = 0
    while r_norm > target and its < max_iter:
        ap = apply_operator(p)
        denom = np.sum(p * ap)
        if not np.isfinite(denom) or denom <= 0.0:
            raise FloatingPointError("operator lost positive definiteness in pcg")
        step = rz / denom
        x += step * p
        r -= step * ap
        r_norm = np.sqrt(np.sum(r * r))
        if not np.isfinite(r_norm):
            raise FloatingPointError("NaN residual encountered in pcg")
        history.append(float(r_norm))
        if r_norm < best_norm:
            best_norm = r_norm
            best_x[...] = x
        z = r / diag if diag is not None else r
        rz_next = np.sum(r * z)
        p = z + (rz_next / rz) * p
        rz = rz_next
        its += 1

    return best_x, PcgReport(its, history, bool(best_norm <= target))
