"""Synthetic reconstruction cases with analytic ground truth.

Each factory returns a :class:`SyntheticCase` holding the exact surface, the
sampled level lines (with geometric normals from the tangent rotation and,
separately, the analytic up-slope directions), the per-line matching weights
and the solver settings the case is known to converge well with.  All
factories are deterministic: two calls produce identical data.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .fields import Grid2D
from .geometry import LevelLine, normals_from_level_line, rasterize_constraints
from .model import ConstraintSet, RegularizerWeights, SolverConfig


@dataclass
class SyntheticCase:
    name: str
    grid: Grid2D
    ground_truth: np.ndarray
    level_values: list[float]
    lines: list[LevelLine]
    up_slopes: list[np.ndarray]          # per line: (m, 2) analytic up-slope units
    weights: RegularizerWeights
    theta: object                        # scalar or per-line sequence
    alpha: object                        # scalar or per-line sequence
    config: SolverConfig
    eval_mask: np.ndarray | None = None  # region for error metrics (None = all)
    eps_threshold: float = 0.2
    extra_heights: list[tuple[int, int, float, float]] = dc_field(default_factory=list)
    # isolated height pins: (i, j, value, weight)

    def constraints(self, true_signs: bool = True) -> ConstraintSet:
        """Rasterize the case; optionally orient every normal up-slope.

        With ``true_signs=False`` the normals keep the geometric orientation
        from the tangent rotation, which is what the sign-determination
        procedures are given to fix.
        """
        lines = self.lines
        if true_signs:
            lines = []
            for ln, up in zip(self.lines, self.up_slopes):
                flip = np.sum(ln.normals * up, axis=1) < 0.0
                normals = ln.normals.copy()
                normals[flip] *= -1.0
                fixed = LevelLine(level=ln.level, points=ln.points,
                                  closed=ln.closed, tangents=ln.tangents,
                                  normals=normals)
                lines.append(fixed)
        cs, _ = rasterize_constraints(lines, self.theta, self.alpha, self.grid)
        for i, j, value, weight in self.extra_heights:
            cs.height_mask[j, i] = True
            cs.heights[j, i] = value
            cs.height_weight[j, i] = weight
        return cs


def rmse(a: np.ndarray, b: np.ndarray, mask: np.ndarray | None = None) -> float:
    d = (a - b) if mask is None else (a - b)[mask]
    return float(np.sqrt(np.mean(d * d)))


def max_abs_err(a: np.ndarray, b: np.ndarray, mask: np.ndarray | None = None) -> float:
    d = (a - b) if mask is None else (a - b)[mask]
    return float(np.max(np.abs(d)))


def _circle_line(cx: float, cy: float, radius: float, level: float,
                 points_per_cell: float = 1.5) -> tuple[LevelLine, np.ndarray]:
    """A closed circle polyline plus its inward (up-slope for peaks) directions."""
    m = max(12, int(np.ceil(2.0 * np.pi * radius * points_per_cell)))
    th = 2.0 * np.pi * np.arange(m) / m
    pts = np.column_stack([cx + radius * np.cos(th), cy + radius * np.sin(th)])
    line = normals_from_level_line(LevelLine(level=level, points=pts, closed=True))
    inward = -np.column_stack([np.cos(th), np.sin(th)])
    return line, inward


def _square_line(cx: float, cy: float, half: float, level: float,
                 step: float = 0.7,
                 corner_margin: float = 0.0) -> tuple[LevelLine, np.ndarray]:
    """A closed axis-aligned square polyline with analytic side normals.

    ``corner_margin`` keeps the samples away from the corners; on square-wall
    surfaces the diagonal crease cells see both faces in their forward
    differences, so their directional response never reflects either normal
    and any sample landing there is unusable for matching.
    """
    r = half - corner_margin
    m = max(2, int(np.ceil(2.0 * r / step)))
    t = np.linspace(-r, r, m + 1)
    if corner_margin == 0.0:
        t = t[:-1]  # exact corners: avoid duplicating them across sides
    sides = [((0.0, -half), (1.0, 0.0), (0.0, 1.0)),
             ((half, 0.0), (0.0, 1.0), (-1.0, 0.0)),
             ((0.0, half), (-1.0, 0.0), (0.0, -1.0)),
             ((-half, 0.0), (0.0, -1.0), (1.0, 0.0))]
    pts, inward = [], []
    for (ox, oy), (dx, dy), nrm in sides:
        pts += [(cx + ox + dx * v, cy + oy + dy * v) for v in t]
        inward += [nrm] * len(t)
    pts = np.array(pts)
    inward = np.array(inward, dtype=float)
    tangents = np.column_stack([inward[:, 1], -inward[:, 0]])
    line = LevelLine(level=level, points=pts, closed=True,
                     tangents=tangents, normals=inward.copy())
    return line, inward


def make_ramp_case(n: int = 64) -> SyntheticCase:
    """Affine ramp rising 0 to 1 between two vertical level lines.

    Only the second-order regularizer is active; the exact solution between
    the lines is the affine interpolant, which is what ``eval_mask`` selects.
    """
    grid = Grid2D(n, n)
    x0, x1 = n // 8, n - 1 - n // 8
    xs, _ = grid.meshgrid()
    gt = (xs - x0) / float(x1 - x0)
    lines, ups = [], []
    for x, level in ((x0, 0.0), (x1, 1.0)):
        pts = np.column_stack([np.full(n, float(x)), np.arange(n, dtype=float)])
        lines.append(normals_from_level_line(
            LevelLine(level=level, points=pts, closed=False)))
        ups.append(np.tile([1.0, 0.0], (n, 1)))
    mask = np.zeros(grid.shape, dtype=bool)
    mask[:, x0:x1 + 1] = True
    cfg = SolverConfig(c_q=1000.0, c_p=1000.0, c_e=1000.0,
                       outer_max=2000, tol_rel_change=0.0)
    return SyntheticCase(name="ramp", grid=grid, ground_truth=gt,
                         level_values=[0.0, 1.0], lines=lines, up_slopes=ups,
                         weights=RegularizerWeights.constant(grid, 1.0, 0.0),
                         theta=1e5, alpha=0.0, config=cfg, eval_mask=mask)


def make_cone_case(n: int = 128, alpha: float = 1.0) -> SyntheticCase:
    """Cone sampled on one mid-height circle, anchored at base and apex.

    The matched circle sits halfway up the wall, where the surface slopes on
    both sides of every cell.  A circle on the base ring would leave the
    cells whose forward differences sample only the flat outside with no
    directional response, so their signs would come down to round-off noise.
    The heights-only pins (base ring at zero plus the apex cell) make the
    straight cone the cheapest interpolant of the height data -- a lone apex
    pin is satisfied more cheaply by a one-cell spike on a flat plane than by
    an actual cone -- and they bound the wall when ``alpha`` exceeds what the
    curvature term can hold back.  Varying ``alpha`` bends the wall from
    concave (negative) to convex.
    """
    grid = Grid2D(n, n)
    c = (n - 1) / 2.0
    radius = 0.75 * (n - 1) / 2.0
    apex_h = radius / 2.0
    xs, ys = grid.meshgrid()
    r = np.hypot(xs - c, ys - c)
    gt = apex_h * np.maximum(0.0, 1.0 - r / radius)
    line, inward = _circle_line(c, c, radius / 2.0, apex_h / 2.0)
    ai = int(np.floor(c + 0.5))
    pins = [(ai, ai, apex_h, 1e5)]
    seen = {(ai, ai)}
    base, _ = _circle_line(c, c, radius, 0.0)
    for x, y in base.points:
        i, j = int(np.floor(x + 0.5)), int(np.floor(y + 0.5))
        if (i, j) not in seen:
            seen.add((i, j))
            pins.append((i, j, 0.0, 1e5))
    cfg = SolverConfig(c_q=50.0, c_p=50.0, c_e=50.0,
                       outer_max=800, tol_rel_change=0.0)
    mask = r <= radius
    return SyntheticCase(name="cone", grid=grid, ground_truth=gt,
                         level_values=[apex_h / 2.0], lines=[line],
                         up_slopes=[inward],
                         weights=RegularizerWeights.constant(grid, 1.0, 0.0),
                         theta=1e5, alpha=alpha, config=cfg, eval_mask=mask,
                         extra_heights=pins)


def cone_center_height(case: SyntheticCase, height: np.ndarray,
                       frac: float = 0.15) -> float:
    """Mean height over the small center disk (radius frac * base radius)."""
    n = case.grid.nx
    c = (n - 1) / 2.0
    radius = 0.75 * (n - 1) / 2.0
    xs, ys = case.grid.meshgrid()
    r = np.hypot(xs - c, ys - c)
    return float(height[r < frac * radius].mean())


def make_semisphere_case(n: int = 128, contours: int = 4) -> SyntheticCase:
    """Hemisphere sampled on nested circles of equally spaced heights.

    The lowest (outermost) circle always sits at one third of the sphere
    radius, where the analytic slope is 2.83, matching its stronger matching
    weight; refinements with more contours keep the coarser levels nested.
    The equator itself contributes a heights-only circle at level zero (its
    slope is vertical, so it carries no usable normals); without it the strip
    outside the lowest contour is free to steepen without bound, because the
    matching gain 2.85 exceeds the curvature cost of a one-sided slope.
    """
    if contours < 1:
        raise ValueError("need at least one contour")
    grid = Grid2D(n, n)
    c = (n - 1) / 2.0
    radius = 0.42 * (n - 1)
    xs, ys = grid.meshgrid()
    r = np.hypot(xs - c, ys - c)
    gt = np.sqrt(np.maximum(0.0, radius ** 2 - r ** 2))
    levels = [radius / 3.0 + (2.0 * radius / 3.0) * k / contours
              for k in range(contours)]
    lines, ups, alphas = [], [], []
    for k, level in enumerate(levels):
        rk = np.sqrt(radius ** 2 - level ** 2)
        line, inward = _circle_line(c, c, rk, level)
        lines.append(line)
        ups.append(inward)
        alphas.append(2.85 if k == 0 else 0.5)
    base, _ = _circle_line(c, c, radius, 0.0)
    pins = []
    seen = set()
    for x, y in base.points:
        i, j = int(np.floor(x + 0.5)), int(np.floor(y + 0.5))
        if (i, j) not in seen:
            seen.add((i, j))
            pins.append((i, j, 0.0, 1e5))
    cfg = SolverConfig(c_q=50.0, c_p=50.0, c_e=50.0,
                       outer_max=800, tol_rel_change=0.0)
    return SyntheticCase(name="semisphere", grid=grid, ground_truth=gt,
                         level_values=levels, lines=lines, up_slopes=ups,
                         weights=RegularizerWeights.constant(grid, 1.0, 0.0),
                         theta=1e5, alpha=alphas, config=cfg,
                         eval_mask=r <= radius, extra_heights=pins)


def _pyramid_profile(u: np.ndarray, a0: float, a1: float, a2: float, a3: float,
                     h1: float, h2: float) -> np.ndarray:
    """Two-tier pyramid height as a function of the Chebyshev radius u."""
    out = np.zeros_like(u)
    wall1 = (u <= a0) & (u > a1)
    out[wall1] = h1 * (a0 - u[wall1]) / (a0 - a1)
    terrace = (u <= a1) & (u > a2)
    out[terrace] = h1
    wall2 = (u <= a2) & (u > a3)
    out[wall2] = h1 + (h2 - h1) * (a2 - u[wall2]) / (a2 - a3)
    out[u <= a3] = h2
    return out


def make_pyramid_case(n: int = 128) -> SyntheticCase:
    """Two-tier pyramid with region-dependent regularizers.

    Level lines: two on the lower wall (the upper one, close to the tier
    break, carries a much larger matching weight) and one on the upper wall.
    Both strong-weight candidates stay strictly inside the sloped bands: a
    line placed exactly on a crease has half its cells seeing the flat side
    in their forward difference, which starves the adaptive sign admission.
    Walls use the second-order regularizer (strong on the lower tier), flat
    regions only the first-order one.
    """
    grid = Grid2D(n, n)
    c = (n - 1) / 2.0
    s = (n - 1) / 2.0
    a0, a1, a2, a3 = 0.80 * s, 0.53 * s, 0.40 * s, 0.16 * s
    h1 = 0.5 * (a0 - a1)          # both walls have slope 1/2
    h2 = h1 + 0.5 * (a2 - a3)
    xs, ys = grid.meshgrid()
    u = np.maximum(np.abs(xs - c), np.abs(ys - c))
    gt = _pyramid_profile(u, a0, a1, a2, a3, h1, h2)

    w1 = a0 - a1
    specs = [(a1 + 0.7 * w1, 0.3 * h1, 1.0),       # lower third of wall one
             (a1 + 0.3 * w1, 0.7 * h1, 11.0),      # near the tier break
             ((a2 + a3) / 2.0, (h1 + h2) / 2.0, 1.0)]  # mid upper wall
    lines, ups, alphas = [], [], []
    for half, level, al in specs:
        line, inward = _square_line(c, c, half, level, corner_margin=1.5)
        lines.append(line)
        ups.append(inward)
        alphas.append(al)

    wall1 = (u <= a0) & (u >= a1)
    wall2 = (u <= a2) & (u >= a3)
    g = np.where(wall1, 10.0, np.where(wall2, 1.0, 0.0))
    h = np.where(wall1 | wall2, 0.0, 10.0)
    weights = RegularizerWeights(grid=grid, g=g, h=h)
    cfg = SolverConfig(c_q=50.0, c_p=50.0, c_e=50.0,
                       outer_max=800, tol_rel_change=0.0)
    return SyntheticCase(name="pyramid", grid=grid, ground_truth=gt,
                         level_values=[sp[1] for sp in specs], lines=lines,
                         up_slopes=ups, weights=weights, theta=1e5,
                         alpha=alphas, config=cfg, eps_threshold=0.2)


def make_mixed_1d_signal(n: int = 256, rows: int = 8) -> SyntheticCase:
    """Sine arch plus rectangular pulses, embedded as an x-varying strip.

    The profile lives on an n x rows grid that is constant along y, so the
    full 2D model acts as its 1D restriction.  Isolated point constraints
    become short vertical level lines; sign vectors are +-(1, 0).
    """
    grid = Grid2D(n, rows)
    x = np.arange(n, dtype=float)
    prof = np.zeros(n)
    half = n // 2
    prof[:half] = 5.0 * np.sin(2.0 * np.pi * x[:half] / half)
    lo1, hi1 = int(0.55 * n), int(0.70 * n)
    lo2, hi2 = int(0.75 * n), int(0.90 * n)
    prof[lo1:hi1] = 5.0
    prof[lo2:hi2] = -5.0
    gt = np.tile(prof, (rows, 1))

    height_xs = [0, n // 8, 3 * n // 8, half - 1,
                 (lo1 + hi1) // 2, (lo2 + hi2) // 2, int(0.95 * n)]
    vector_xs = [(n // 16, 1.0), (n // 4, -1.0), (7 * n // 16, 1.0),
                 (lo1, 1.0), (hi1, -1.0), (lo2, -1.0), (hi2, 1.0)]

    lines, ups, thetas, alphas = [], [], [], []
    ys = np.arange(rows, dtype=float)
    for xi in height_xs:
        pts = np.column_stack([np.full(rows, float(xi)), ys])
        lines.append(normals_from_level_line(
            LevelLine(level=float(prof[xi]), points=pts, closed=False)))
        ups.append(np.tile([1.0, 0.0], (rows, 1)))
        thetas.append(1e4)
        alphas.append(0.0)
    for xi, sign in vector_xs:
        pts = np.column_stack([np.full(rows, float(xi)), ys])
        lines.append(normals_from_level_line(
            LevelLine(level=float(prof[xi]), points=pts, closed=False)))
        ups.append(np.tile([sign, 0.0], (rows, 1)))
        thetas.append(0.0)
        alphas.append(1.5)
    cfg = SolverConfig(c_q=20.0, c_p=20.0, c_e=20.0,
                       outer_max=1200, tol_rel_change=0.0)
    return SyntheticCase(name="mixed1d", grid=grid, ground_truth=gt,
                         level_values=sorted({ln.level for ln in lines}),
                         lines=lines, up_slopes=ups,
                         weights=RegularizerWeights.constant(grid, 4.0, 1.5),
                         theta=thetas, alpha=alphas, config=cfg)


CASE_FACTORIES = {
    "ramp": make_ramp_case,
    "cone": make_cone_case,
    "semisphere": make_semisphere_case,
    "pyramid": make_pyramid_case,
    "mixed1d": make_mixed_1d_signal,
}
