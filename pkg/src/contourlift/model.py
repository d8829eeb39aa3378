"""Problem data for the reconstruction model: constraints, weights, energy.

The variational energy, summed over cells, is

    g * ||HI||_F + h * ||DI|| - nw * (DI . v) + hw * (I - target)^2

where DI is the forward-difference gradient, HI its componentwise Jacobian,
v the prescribed unit normal, nw the per-cell normal-matching weight (zero
off the normal-constrained cells) and hw the per-cell fidelity weight (zero
off the height-constrained cells).  In "tangent" matching mode the third
term becomes + nw * (DI . v)^2; in mode "none" it is dropped.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .fields import Grid2D, cell_fro_norm, cell_norm, gradient, jacobian

MATCHING_MODES = ("normal", "tangent", "none")


@dataclass
class ConstraintSet:
    """Sparse height and normal constraints rasterized onto the grid.

    heights/height_weight are zero off height_mask; normals/normal_weight are
    zero off normal_mask.  Normals are unit vectors where defined.  The
    weights already include their masks, so downstream code multiplies by
    them directly and never consults the masks for arithmetic.
    """

    grid: Grid2D
    height_mask: np.ndarray = field(repr=False)
    heights: np.ndarray = field(repr=False)
    height_weight: np.ndarray = field(repr=False)
    normal_mask: np.ndarray = field(repr=False)
    normals: np.ndarray = field(repr=False)
    normal_weight: np.ndarray = field(repr=False)

    @classmethod
    def empty(cls, grid: Grid2D) -> "ConstraintSet":
        return cls(grid=grid,
                   height_mask=np.zeros(grid.shape, dtype=bool),
                   heights=grid.scalar(),
                   height_weight=grid.scalar(),
                   normal_mask=np.zeros(grid.shape, dtype=bool),
                   normals=grid.vector(),
                   normal_weight=grid.scalar())

    def copy(self) -> "ConstraintSet":
        return ConstraintSet(grid=self.grid,
                             height_mask=self.height_mask.copy(),
                             heights=self.heights.copy(),
                             height_weight=self.height_weight.copy(),
                             normal_mask=self.normal_mask.copy(),
                             normals=self.normals.copy(),
                             normal_weight=self.normal_weight.copy())

    def without_matching(self) -> "ConstraintSet":
        """Copy with the normal-matching weight zeroed (isotropic problem)."""
        out = self.copy()
        out.normal_weight[...] = 0.0
        return out


@dataclass
class RegularizerWeights:
    """Per-cell weights g (second order) and h (first order)."""

    grid: Grid2D
    g: np.ndarray = field(repr=False)
    h: np.ndarray = field(repr=False)

    @classmethod
    def constant(cls, grid: Grid2D, g: float, h: float) -> "RegularizerWeights":
        return cls(grid=grid, g=np.full(grid.shape, float(g)), h=np.full(grid.shape, float(h)))


@dataclass
class SolverConfig:
    """Penalty parameters and iteration controls for the splitting solver."""

    c_q: float = 1.0
    c_p: float = 1.0
    c_e: float = 1.0
    outer_max: int = 2000
    inner_l: int = 1
    tol_rel_change: float = 1e-7
    pcg_tol: float = 1e-8
    pcg_max: int | None = None
    matching_mode: str = "normal"

    def __post_init__(self):
        if min(self.c_q, self.c_p, self.c_e) <= 0.0:
            raise ValueError("penalty parameters must be positive")
        if self.matching_mode not in MATCHING_MODES:
            raise ValueError(f"matching_mode must be one of {MATCHING_MODES}")

    def with_mode(self, mode: str) -> "SolverConfig":
        return replace(self, matching_mode=mode)


def energy(height: np.ndarray, constraints: ConstraintSet,
           weights: RegularizerWeights, matching_mode: str = "normal") -> float:
    """Evaluate the model energy of a height field by direct summation."""
    if matching_mode not in MATCHING_MODES:
        raise ValueError(f"matching_mode must be one of {MATCHING_MODES}")
    grad = gradient(height)
    hess = jacobian(grad)
    total = float(np.sum(weights.g * cell_fro_norm(hess)))
    total += float(np.sum(weights.h * cell_norm(grad)))
    along = grad[0] * constraints.normals[0] + grad[1] * constraints.normals[1]
    if matching_mode == "normal":
        total -= float(np.sum(constraints.normal_weight * along))
    elif matching_mode == "tangent":
        total += float(np.sum(constraints.normal_weight * along * along))
    diff = height - constraints.heights
    total += float(np.sum(constraints.height_weight * diff * diff))
    return total


def validate(constraints: ConstraintSet,
             weights: RegularizerWeights | None = None) -> list[str]:
    """Return a list of contract violations (empty when consistent)."""
    problems: list[str] = []
    cs = constraints
    shape = cs.grid.shape
    for name in ("height_mask", "heights", "height_weight",
                 "normal_mask", "normal_weight"):
        if getattr(cs, name).shape != shape:
            problems.append(f"{name} has shape {getattr(cs, name).shape}, expected {shape}")
    if cs.normals.shape != (2, *shape):
        problems.append(f"normals has shape {cs.normals.shape}, expected {(2, *shape)}")
    if problems:
        return problems

    for name in ("heights", "height_weight", "normals", "normal_weight"):
        if not np.all(np.isfinite(getattr(cs, name))):
            problems.append(f"{name} contains non-finite values")
    if not np.any(cs.height_mask):
        problems.append("no height constraints: the reconstruction is unanchored")
    if np.any(cs.height_weight < 0.0):
        problems.append("height_weight has negative entries")
    if np.any((cs.height_weight > 0.0) != cs.height_mask):
        problems.append("height_weight must be positive exactly on height_mask")
    if np.any(cs.heights[~cs.height_mask] != 0.0):
        problems.append("heights must be zero off height_mask")
    if np.any(cs.normal_weight[~cs.normal_mask] != 0.0):
        problems.append("normal_weight must be zero off normal_mask")
    if np.any(cs.normals[:, ~cs.normal_mask] != 0.0):
        problems.append("normals must be zero off normal_mask")
    if np.any(cs.normal_mask):
        norms = cell_norm(cs.normals)[cs.normal_mask]
        if np.max(np.abs(norms - 1.0)) > 1e-9:
            problems.append("normals on normal_mask must be unit vectors")

    if weights is not None:
        if weights.g.shape != shape or weights.h.shape != shape:
            problems.append("regularizer weight shape does not match grid")
        else:
            if np.any(weights.g < 0.0) or np.any(weights.h < 0.0):
                problems.append("regularizer weights must be nonnegative")
            if not np.any((weights.g > 0.0) | (weights.h > 0.0)):
                problems.append("regularizer weights vanish everywhere")
    return problems
