"""Augmented-Lagrangian splitting solver for the reconstruction energy.

The energy is split with three auxiliary fields:

    slope        ~ gradient(height)      (vector, carries the shrinkages)
    slope_smooth ~ slope                 (vector, solved spectrally)
    curv         ~ jacobian(slope_smooth) (2x2 tensor, second-order shrinkage)

Each outer iteration sweeps the four subproblems in the order curv, slope,
slope_smooth, height (each has a closed form or a fast solver), then takes a
gradient-ascent step on the three multipliers.  All subproblem solutions are
exact minimizers of the discrete augmented Lagrangian: the divergence used in
the right-hand sides is the exact adjoint of the gradient, so the Neumann
boundary fluxes are already folded into the boundary rows and the spectral
solve needs no extra boundary handling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fields import (cell_fro_norm, cell_norm, divergence, gradient, jacobian,
                     norm2)
from .krylov import PcgReport, build_height_operator, pcg
from .model import ConstraintSet, RegularizerWeights, SolverConfig, energy
from .spectral import SpectralPlan, solve_modified_helmholtz


@dataclass
class AlmState:
    """All iterates of the splitting scheme, initialized to zero."""

    height: np.ndarray
    slope: np.ndarray
    slope_smooth: np.ndarray
    curv: np.ndarray
    mul_slope: np.ndarray
    mul_smooth: np.ndarray
    mul_curv: np.ndarray

    @classmethod
    def zeros(cls, grid) -> "AlmState":
        return cls(height=grid.scalar(), slope=grid.vector(),
                   slope_smooth=grid.vector(), curv=grid.tensor(),
                   mul_slope=grid.vector(), mul_smooth=grid.vector(),
                   mul_curv=grid.tensor())


@dataclass
class Diagnostics:
    """Per-outer-iteration history of the solve."""

    energy: list[float] = field(default_factory=list)
    res_slope: list[float] = field(default_factory=list)
    res_smooth: list[float] = field(default_factory=list)
    res_curv: list[float] = field(default_factory=list)
    rel_change: list[float] = field(default_factory=list)
    pcg_iterations: list[int] = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.energy)


def _shrink_factor(norms: np.ndarray, threshold: np.ndarray) -> np.ndarray:
    """max(0, 1 - threshold/norms) with the zero-norm cells mapped to zero."""
    scale = np.zeros_like(norms)
    np.divide(threshold, norms, out=scale, where=norms > 0.0)
    return np.where(norms > 0.0, np.maximum(0.0, 1.0 - scale), 0.0)


def shrink_curvature(slope_smooth: np.ndarray, mul_curv: np.ndarray,
                     g: np.ndarray, c_q: float) -> np.ndarray:
    """Closed-form tensor shrinkage: argmin g||Q||_F + <mul,Q> + c_q/2 ||Q - HE||_F^2.

    With W = jacobian(slope_smooth) - mul_curv/c_q the minimizer is
    max(0, 1 - g/(c_q ||W||_F)) * W, cellwise, and 0 where W vanishes.
    """
    w = jacobian(slope_smooth) - mul_curv / c_q
    factor = _shrink_factor(cell_fro_norm(w), g / c_q)
    return factor[None, None] * w


def shrink_slope(grad_height: np.ndarray, slope_smooth: np.ndarray,
                 mul_slope: np.ndarray, mul_smooth: np.ndarray,
                 constraints: ConstraintSet, h: np.ndarray,
                 c_p: float, c_e: float, matching_mode: str = "normal") -> np.ndarray:
    """Cellwise slope update.

    normal/none: vector shrinkage of X = (c_p*DI + c_e*E - mul_slope +
    mul_smooth + nw*v) / (c_p + c_e) with threshold h/(c_p + c_e); mode
    "none" drops the nw*v drift.  tangent: on the normal-constrained cells
    (which must have h = 0) solves the 2x2 system
    ((c_p+c_e)*Id + 2*nw*v v^T) P = c_p*DI + c_e*E - mul_slope + mul_smooth
    by rank-one inversion, plain shrinkage elsewhere.
    """
    s = c_p + c_e
    base = c_p * grad_height + c_e * slope_smooth - mul_slope + mul_smooth
    nw = constraints.normal_weight
    v = constraints.normals

    if matching_mode in ("normal", "none"):
        x = base.copy()
        if matching_mode == "normal":
            x += nw[None] * v
        x /= s
        factor = _shrink_factor(cell_norm(x), h / s)
        return factor[None] * x

    if matching_mode != "tangent":
        raise ValueError(f"unknown matching mode {matching_mode!r}")
    mask = constraints.normal_mask
    if np.any(h[mask] != 0.0):
        raise ValueError("tangent matching requires h = 0 on the normal-constrained cells")
    if np.any(s + 2.0 * nw <= 0.0):
        raise ValueError("tangent matching needs c_p + c_e + 2*weight > 0 everywhere")
    x = base / s
    factor = _shrink_factor(cell_norm(x), h / s)
    out = factor[None] * x
    # rank-one inverse: (s*Id + 2nw vv^T)^-1 = (Id - 2nw vv^T/(s+2nw)) / s
    along = v[0] * base[0] + v[1] * base[1]
    coeff = 2.0 * nw * along / (s * (s + 2.0 * nw))
    solved = base / s - coeff[None] * v
    out[:, mask] = solved[:, mask]
    return out


def solve_smooth_slope(slope: np.ndarray, curv: np.ndarray,
                       mul_curv: np.ndarray, mul_smooth: np.ndarray,
                       c_q: float, c_e: float, plan: SpectralPlan) -> np.ndarray:
    """Spectral update of the smooth slope field, one Helmholtz solve per component.

    Component i solves  laplacian(E_i) - (c_e/c_q) E_i = F_i  with

        F_i = (mul_smooth_i - c_e*slope_i + div(mul_curv_i)) / c_q + div(curv_i).

    The exact-adjoint divergence puts the Neumann flux of curv + mul_curv/c_q
    on the boundary rows of F, so the solution is the exact minimizer of the
    discrete subproblem.
    """
    lam = c_e / c_q
    out = np.empty_like(slope)
    for i in range(2):
        f = (mul_smooth[i] - c_e * slope[i] + divergence(mul_curv[i])) / c_q
        f += divergence(curv[i])
        out[i] = solve_modified_helmholtz(f, lam, plan)
    return out


def solve_height(slope: np.ndarray, mul_slope: np.ndarray,
                 constraints: ConstraintSet, c_p: float,
                 pcg_tol: float = 1e-8, pcg_max: int | None = None,
                 x0: np.ndarray | None = None) -> tuple[np.ndarray, PcgReport]:
    """Height update by Jacobi-preconditioned CG on the SPD normal equations.

        (-laplacian + 2*hw/c_p) I = 2*hw/c_p * target - div(slope + mul_slope/c_p)
    """
    hw = constraints.height_weight
    apply_op, diag = build_height_operator(hw, c_p)
    rhs = (2.0 / c_p) * hw * constraints.heights
    rhs -= divergence(slope + mul_slope / c_p)
    return pcg(apply_op, rhs, diag, tol=pcg_tol, max_iter=pcg_max, x0=x0)


def update_multipliers(state: AlmState, config: SolverConfig) -> None:
    """Gradient-ascent step on the three constraint multipliers (in place)."""
    state.mul_curv += config.c_q * (state.curv - jacobian(state.slope_smooth))
    state.mul_slope += config.c_p * (state.slope - gradient(state.height))
    state.mul_smooth += config.c_e * (state.slope_smooth - state.slope)


def solve(constraints: ConstraintSet, weights: RegularizerWeights,
          config: SolverConfig | None = None,
          initial_height: np.ndarray | None = None,
          state: AlmState | None = None) -> tuple[np.ndarray, Diagnostics]:
    """Run the outer splitting loop and return (height, diagnostics).

    All state starts at zero except the height when ``initial_height`` is
    given (warm start).  Stops on the relative height change or after
    ``outer_max`` iterations, whichever comes first.
    """
    if config is None:
        config = SolverConfig()
    grid = constraints.grid
    plan = SpectralPlan.for_grid(grid)
    if state is None:
        state = AlmState.zeros(grid)
        if initial_height is not None:
            state.height = np.array(initial_height, dtype=float)
    diag = Diagnostics()

    for _ in range(config.outer_max):
        prev = state.height
        pcg_its = 0
        for _ in range(config.inner_l):
            state.curv = shrink_curvature(state.slope_smooth, state.mul_curv,
                                          weights.g, config.c_q)
            state.slope = shrink_slope(gradient(state.height), state.slope_smooth,
                                       state.mul_slope, state.mul_smooth,
                                       constraints, weights.h,
                                       config.c_p, config.c_e, config.matching_mode)
            state.slope_smooth = solve_smooth_slope(state.slope, state.curv,
                                                    state.mul_curv, state.mul_smooth,
                                                    config.c_q, config.c_e, plan)
            state.height, report = solve_height(state.slope, state.mul_slope,
                                                constraints, config.c_p,
                                                config.pcg_tol, config.pcg_max,
                                                x0=state.height)
            pcg_its += report.iterations
        update_multipliers(state, config)

        if not np.all(np.isfinite(state.height)):
            raise FloatingPointError("height field became non-finite; "
                                     "check penalties and constraint weights")
        rel = norm2(state.height - prev) / max(norm2(state.height), 1e-12)
        diag.energy.append(energy(state.height, constraints, weights,
                                  config.matching_mode))
        diag.res_slope.append(norm2(state.slope - gradient(state.height)))
        diag.res_smooth.append(norm2(state.slope_smooth - state.slope))
        diag.res_curv.append(norm2(state.curv - jacobian(state.slope_smooth)))
        diag.rel_change.append(rel)
        diag.pcg_iterations.append(pcg_its)
        if rel < config.tol_rel_change:
            diag.converged = True
            break

    return state.height, diag
