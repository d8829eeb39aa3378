"""Level-line geometry: chaining point clouds, normals, rasterization, signs.

Level lines are ordered polylines at a fixed height.  Point coordinates are
(x, y) in grid units, so cell (i, j) sits at coordinates (i, j).  Prescribed
normals are unit vectors obtained by rotating the local tangent by +90
degrees; their orientation (which of the two rotations points up-slope) is
what the sign-determination procedures decide.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .fields import Grid2D, gradient
from .model import ConstraintSet, RegularizerWeights, SolverConfig
from . import solver


@dataclass(frozen=True)
class PointCloudSample:
    x: float
    y: float
    level: float


@dataclass
class LevelLine:
    """Ordered polyline at one height; tangents/normals optional until computed."""

    level: float
    points: np.ndarray  # (m, 2) columns x, y
    closed: bool = False
    tangents: np.ndarray | None = None
    normals: np.ndarray | None = None

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        if self.points.shape[1] != 2:
            raise ValueError("level line points must be (m, 2)")


@dataclass(frozen=True)
class CellCollision:
    """Raster cell claimed twice with conflicting data (first writer kept)."""

    i: int
    j: int
    kind: str  # "height" or "normal"
    detail: str


@dataclass
class SignReport:
    """Per-cell record of a sign-determination run."""

    alignment: np.ndarray        # v . grad(height) at the last probe solve
    strength: np.ndarray         # |v . grad(height)| that admitted the cell
    admitted_round: np.ndarray   # int, -1 where never admitted
    flipped: np.ndarray          # bool, normals that changed orientation
    rounds: int = 0
    warning: str | None = None


def _chain_greedy(points: np.ndarray, order: np.ndarray,
                  threshold: float) -> list[list[int]]:
    """Greedy nearest-neighbor chains over one level group.

    ``order`` holds original sample indices (used for deterministic tie
    breaks: seeds and equal-distance candidates take the lowest index).
    Chains grow from the seed's tail; when stuck, the chain is reversed once
    to grow from the other end.
    """
    n = len(points)
    unused = np.ones(n, dtype=bool)
    chains = []
    while unused.any():
        candidates = np.flatnonzero(unused)
        seed = candidates[np.argmin(order[candidates])]
        unused[seed] = False
        chain = [seed]
        for _ in range(2):
            while True:
                free = np.flatnonzero(unused)
                if free.size == 0:
                    break
                d = np.hypot(points[free, 0] - points[chain[-1], 0],
                             points[free, 1] - points[chain[-1], 1])
                best = d.min()
                if best > threshold:
                    break
                tied = free[d == best]
                nxt = tied[np.argmin(order[tied])]
                chain.append(int(nxt))
                unused[nxt] = False
            chain.reverse()
        chains.append(chain)
    return chains


def assemble_level_lines(samples: list[PointCloudSample],
                         connect_threshold: float) -> list[LevelLine]:
    """Group samples by level and chain each group by nearest neighbors.

    A chain is closed when it has at least 3 points and its endpoints are
    within the threshold.  Isolated samples come back as 1-point degenerate
    lines (no tangents can be attached to them).
    """
    if connect_threshold <= 0.0:
        raise ValueError("connect_threshold must be positive")
    groups: dict[float, list[int]] = {}
    for idx, s in enumerate(samples):
        groups.setdefault(float(s.level), []).append(idx)
    lines = []
    for level in sorted(groups):
        idxs = np.array(groups[level])
        pts = np.array([[samples[k].x, samples[k].y] for k in idxs])
        for chain in _chain_greedy(pts, idxs, connect_threshold):
            cpts = pts[chain]
            closed = (len(chain) >= 3
                      and np.hypot(*(cpts[0] - cpts[-1])) <= connect_threshold)
            lines.append(LevelLine(level=level, points=cpts, closed=closed))
    return lines


def normals_from_level_line(line: LevelLine) -> LevelLine:
    """Central-difference tangents (wrapping when closed) rotated +90 degrees.

    Duplicate consecutive points are skipped when differencing and inherit
    the tangent of their representative.  Endpoints of open lines use
    one-sided differences.
    """
    pts = line.points
    m = len(pts)
    if m < 2:
        raise ValueError("cannot attach normals to a line with fewer than 2 points")
    keep = [0]
    for k in range(1, m):
        if not np.array_equal(pts[k], pts[keep[-1]]):
            keep.append(k)
    rep = np.searchsorted(keep, np.arange(m), side="right") - 1
    u = pts[keep]
    mu = len(u)
    if mu < 2:
        raise ValueError("line is a single repeated point; no tangent direction")
    t = np.empty_like(u)
    if line.closed and mu >= 3:
        t = np.roll(u, -1, axis=0) - np.roll(u, 1, axis=0)
    else:
        t[0] = u[1] - u[0]
        t[-1] = u[-1] - u[-2]
        if mu > 2:
            t[1:-1] = u[2:] - u[:-2]
    norms = np.hypot(t[:, 0], t[:, 1])
    if np.any(norms == 0.0):
        raise ValueError("zero-length tangent encountered")
    t /= norms[:, None]
    tangents = t[rep]
    normals = np.stack([-tangents[:, 1], tangents[:, 0]], axis=1)
    return replace(line, tangents=tangents, normals=normals)


def rasterize_constraints(lines: list[LevelLine],
                          theta,
                          alpha,
                          grid: Grid2D) -> tuple[ConstraintSet, list[CellCollision]]:
    """Nearest-cell rasterization of level lines into a constraint set.

    ``theta`` and ``alpha`` may each be a scalar, a per-line sequence, or a
    (ny, nx) field sampled at the written cell.  Lines rasterized with
    theta = 0 contribute no height constraint (useful for pure vector data);
    alpha may be negative or zero.  The first writer of a cell wins; repeat
    writes are only reported when they disagree (different level, or a
    normal from a different line).
    """
    cs = ConstraintSet.empty(grid)
    collisions: list[CellCollision] = []
    owner_level = np.full(grid.shape, np.nan)
    owner_line = np.full(grid.shape, -1, dtype=int)

    def per_line(spec, k, i, j):
        if np.isscalar(spec):
            return float(spec)
        arr = np.asarray(spec)
        if arr.shape == grid.shape:
            return float(arr[j, i])
        return float(arr[k])

    out_of_range = []
    for k, line in enumerate(lines):
        has_normals = line.normals is not None
        for p_idx in range(len(line.points)):
            x, y = line.points[p_idx]
            i = int(np.floor(x + 0.5))
            j = int(np.floor(y + 0.5))
            if not (0 <= i < grid.nx and 0 <= j < grid.ny):
                out_of_range.append((x, y))
                continue
            th = per_line(theta, k, i, j)
            if th < 0.0:
                raise ValueError("theta must be nonnegative")
            if th > 0.0:
                if not cs.height_mask[j, i]:
                    cs.height_mask[j, i] = True
                    cs.heights[j, i] = line.level
                    cs.height_weight[j, i] = th
                    owner_level[j, i] = line.level
                elif owner_level[j, i] != line.level:
                    collisions.append(CellCollision(
                        i, j, "height",
                        f"level {line.level} dropped, cell keeps {owner_level[j, i]}"))
            if has_normals:
                al = per_line(alpha, k, i, j)
                if not cs.normal_mask[j, i]:
                    cs.normal_mask[j, i] = True
                    cs.normals[:, j, i] = line.normals[p_idx]
                    cs.normal_weight[j, i] = al
                    owner_line[j, i] = k
                elif owner_line[j, i] != k:
                    collisions.append(CellCollision(
                        i, j, "normal",
                        f"normal of line {k} dropped, cell keeps line {owner_line[j, i]}"))
    if out_of_range:
        raise ValueError(f"{len(out_of_range)} line points fall outside the grid, "
                         f"first offender {out_of_range[0]}")
    return cs, collisions


def _flip_against(constraints: ConstraintSet, height: np.ndarray,
                  cells: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Dot normals with grad(height) on the given cells; flip the negative ones.

    Returns (alignment values on those cells, boolean flipped).  Exact zeros
    keep their current orientation.
    """
    g = gradient(height)
    rho = (constraints.normals[0] * g[0] + constraints.normals[1] * g[1])[cells]
    flip = rho < 0.0
    sub = constraints.normals[:, cells]
    sub[:, flip] *= -1.0
    constraints.normals[:, cells] = sub
    return rho, flip


def determine_signs_global(constraints: ConstraintSet,
                           weights: RegularizerWeights,
                           config: SolverConfig | None = None
                           ) -> tuple[ConstraintSet, SignReport]:
    """One isotropic solve, then flip every normal whose alignment is negative."""
    if config is None:
        config = SolverConfig()
    out = constraints.copy()
    height, _ = solver.solve(constraints.without_matching(), weights, config)
    report = SignReport(alignment=np.zeros(constraints.grid.shape),
                        strength=np.zeros(constraints.grid.shape),
                        admitted_round=np.full(constraints.grid.shape, -1, dtype=int),
                        flipped=np.zeros(constraints.grid.shape, dtype=bool),
                        rounds=1)
    mask = out.normal_mask
    rho, flip = _flip_against(out, height, mask)
    report.alignment[mask] = rho
    report.strength[mask] = np.abs(rho)
    report.admitted_round[mask] = 1
    report.flipped[mask] = flip
    return out, report


def determine_signs_adaptive(constraints: ConstraintSet,
                             weights: RegularizerWeights,
                             config: SolverConfig | None = None,
                             eps_threshold: float = 0.2,
                             round_cap: int = 50
                             ) -> tuple[ConstraintSet, SignReport]:
    """Grow the matched set cell by cell, freezing signs as cells are admitted.

    Starts from an isotropic solve (no cells matched).  Each round admits the
    not-yet-admitted normal cells whose directional-derivative magnitude
    |v . grad(height)| exceeds ``eps_threshold``, flips the ones pointing
    down-slope, and re-solves with matching active on everything admitted so
    far (warm-started from the previous height).  Stops when a round admits
    nothing or the cap is hit; never-admitted cells keep weight zero and are
    reported in a warning.
    """
    if config is None:
        config = SolverConfig()
    out = constraints.copy()
    grid = constraints.grid
    admitted = np.zeros(grid.shape, dtype=bool)
    report = SignReport(alignment=np.zeros(grid.shape),
                        strength=np.zeros(grid.shape),
                        admitted_round=np.full(grid.shape, -1, dtype=int),
                        flipped=np.zeros(grid.shape, dtype=bool))
    work = out.copy()
    work.normal_weight = np.zeros(grid.shape)
    height = None
    for rnd in range(1, round_cap + 1):
        height, _ = solver.solve(work, weights, config, initial_height=height)
        report.rounds = rnd
        pending = out.normal_mask & ~admitted
        if not pending.any():
            break
        g = gradient(height)
        rho = (out.normals[0] * g[0] + out.normals[1] * g[1])
        report.alignment[pending] = rho[pending]
        newly = pending & (np.abs(rho) > eps_threshold)
        if not newly.any():
            break
        rho_new, flip = _flip_against(out, height, newly)
        report.strength[newly] = np.abs(rho_new)
        report.admitted_round[newly] = rnd
        report.flipped[newly] = flip
        admitted |= newly
        work.normals = out.normals
        work.normal_weight = np.where(admitted, out.normal_weight, 0.0)
    leftover = out.normal_mask & ~admitted
    if leftover.any():
        report.warning = (f"{int(leftover.sum())} normal cells never exceeded "
                          f"the admission threshold {eps_threshold}")
        warnings.warn(report.warning)
        out.normal_weight = np.where(admitted, out.normal_weight, 0.0)
        out.normal_mask = admitted
        out.normals = np.where(admitted[None], out.normals, 0.0)
    return out, report


# ---------------------------------------------------------------------------
# contour extraction (marching squares on cell corners)

# For each 2x2 corner configuration (bit k set = corner k above the level,
# corners ordered 00,10,11,01 counter-clockwise starting at (i, j)), the
# crossed edge pairs.  Edges: 0 bottom (j), 1 right (i+1), 2 top (j+1), 3
# left (i).  Cases 5 and 10 are ambiguous saddles resolved by cell average.
_MS_SEGMENTS = {
    0: [], 15: [],
    1: [(3, 0)], 14: [(0, 3)],
    2: [(0, 1)], 13: [(1, 0)],
    4: [(1, 2)], 11: [(2, 1)],
    8: [(2, 3)], 7: [(3, 2)],
    3: [(3, 1)], 12: [(1, 3)],
    6: [(0, 2)], 9: [(2, 0)],
}


def extract_contours(height: np.ndarray, levels) -> list[LevelLine]:
    """Trace iso-lines of a scalar field as ordered polylines.

    Linear interpolation along cell edges; saddle cells connect according to
    the cell-average rule.  Levels outside the field range yield no lines.
    Levels exactly hitting field values are nudged up by a relative epsilon
    so plateaus produce well-defined curves.
    """
    ny, nx = height.shape
    lines: list[LevelLine] = []
    span = float(height.max() - height.min())
    for level in np.atleast_1d(np.asarray(levels, dtype=float)):
        lv = float(level)
        if lv < height.min() or lv > height.max():
            continue
        if np.any(height == lv):
            lv = lv + max(span, 1.0) * 1e-12
        above = height > lv

        # edge crossing coordinates, keyed by edge identity
        def h_key(i, j):  # edge between (i, j) and (i+1, j)
            return ("h", i, j)

        def v_key(i, j):  # edge between (i, j) and (i, j+1)
            return ("v", i, j)

        coords: dict[tuple, tuple[float, float]] = {}
        segs: dict[tuple, list[tuple]] = {}

        def crossing(axis, i, j):
            if axis == "h":
                fa, fb = height[j, i], height[j, i + 1]
            else:
                fa, fb = height[j, i], height[j + 1, i]
            t = (lv - fa) / (fb - fa)
            key = (axis, i, j)
            if key not in coords:
                coords[key] = (i + t, j) if axis == "h" else (i, j + t)
            return key

        for j in range(ny - 1):
            for i in range(nx - 1):
                code = (int(above[j, i]) | int(above[j, i + 1]) << 1
                        | int(above[j + 1, i + 1]) << 2 | int(above[j + 1, i]) << 3)
                if code in (0, 15):
                    continue
                if code in (5, 10):
                    # saddle: the cell average decides whether the two above-
                    # corners connect through the center
                    mean_above = (height[j:j + 2, i:i + 2].mean() > lv)
                    if code == 5:  # corners (i,j) and (i+1,j+1) above
                        pairs = [(0, 1), (2, 3)] if mean_above else [(3, 0), (1, 2)]
                    else:          # corners (i+1,j) and (i,j+1) above
                        pairs = [(3, 0), (1, 2)] if mean_above else [(0, 1), (2, 3)]
                else:
                    pairs = _MS_SEGMENTS[code]
                edge_keys = {0: h_key(i, j), 1: v_key(i + 1, j),
                             2: h_key(i, j + 1), 3: v_key(i, j)}
                for a, b in pairs:
                    ka = crossing(*edge_keys[a])
                    kb = crossing(*edge_keys[b])
                    segs.setdefault(ka, []).append(kb)
                    segs.setdefault(kb, []).append(ka)

        visited = set()
        # open paths first (nodes of degree 1), then remaining cycles
        ends = sorted(k for k, nb in segs.items() if len(nb) == 1)
        starts = ends + sorted(k for k in segs if k not in set(ends))
        for start in starts:
            if start in visited or start not in segs:
                continue
            path = [start]
            visited.add(start)
            while True:
                nxt = [k for k in segs[path[-1]] if k not in visited]
                if not nxt:
                    break
                path.append(nxt[0])
                visited.add(nxt[0])
            if len(path) < 2:
                continue
            closed = path[0] in segs[path[-1]] and len(path) >= 3
            pts = np.array([coords[k] for k in path])
            lines.append(LevelLine(level=float(level), points=pts, closed=closed))
    return lines


def _project_to_polyline(pts: np.ndarray, line: LevelLine) -> tuple[np.ndarray, np.ndarray]:
    """Distances and arclength parameters of points projected on a polyline."""
    v = line.points
    seg = np.vstack([v, v[:1]]) if line.closed else v
    a, b = seg[:-1], seg[1:]
    ab = b - a
    ab2 = np.maximum(np.sum(ab * ab, axis=1), 1e-300)
    cum = np.concatenate([[0.0], np.cumsum(np.sqrt(np.sum(ab * ab, axis=1)))])
    best_d = np.full(len(pts), np.inf)
    best_s = np.zeros(len(pts))
    for k in range(len(a)):
        t = np.clip(((pts - a[k]) @ ab[k]) / ab2[k], 0.0, 1.0)
        proj = a[k] + t[:, None] * ab[k]
        d = np.hypot(*(pts - proj).T)
        better = d < best_d
        best_d[better] = d[better]
        best_s[better] = cum[k] + t[better] * np.sqrt(ab2[k])
    return best_d, best_s


def order_via_isotropic(samples: list[PointCloudSample],
                        isotropic_height: np.ndarray,
                        connect_threshold: float
                        ) -> tuple[list[LevelLine], list[PointCloudSample]]:
    """Order scattered samples along the iso-lines of a presolved surface.

    Each sample is projected onto the extracted contour of its own level;
    samples on the same contour are sorted by arclength and then chained with
    the usual threshold cuts.  Samples farther than the threshold from every
    contour of their level are returned unordered.
    """
    levels = sorted({float(s.level) for s in samples})
    contours = extract_contours(isotropic_height, levels)
    by_level: dict[float, list[LevelLine]] = {}
    for c in contours:
        by_level.setdefault(c.level, []).append(c)

    lines: list[LevelLine] = []
    unordered: list[PointCloudSample] = []
    for level in levels:
        idx = [k for k, s in enumerate(samples) if float(s.level) == level]
        pts = np.array([[samples[k].x, samples[k].y] for k in idx])
        cands = by_level.get(level, [])
        if not cands:
            unordered.extend(samples[k] for k in idx)
            continue
        dists = np.full((len(cands), len(pts)), np.inf)
        params = np.zeros_like(dists)
        for c_k, cand in enumerate(cands):
            dists[c_k], params[c_k] = _project_to_polyline(pts, cand)
        owner = np.argmin(dists, axis=0)
        dmin = dists[owner, np.arange(len(pts))]
        for c_k, cand in enumerate(cands):
            mine = np.flatnonzero((owner == c_k) & (dmin <= connect_threshold))
            if mine.size == 0:
                continue
            s = params[c_k, mine]
            ordering = mine[np.argsort(s, kind="stable")]
            opts = pts[ordering]
            if cand.closed and len(ordering) >= 3:
                # cut the cyclic order at the largest gap
                gaps = np.hypot(*(np.roll(opts, -1, axis=0) - opts).T)
                cut = int(np.argmax(gaps)) + 1
                ordering = np.concatenate([ordering[cut:], ordering[:cut]])
                opts = pts[ordering]
            # split where consecutive samples are farther than the threshold
            jump = np.flatnonzero(np.hypot(*np.diff(opts, axis=0).T) > connect_threshold)
            pieces = np.split(np.arange(len(ordering)), jump + 1)
            for piece in pieces:
                ppts = opts[piece]
                closed = (len(ppts) >= 3
                          and np.hypot(*(ppts[0] - ppts[-1])) <= connect_threshold)
                lines.append(LevelLine(level=level, points=ppts, closed=closed))
        far = np.flatnonzero(dmin > connect_threshold)
        unordered.extend(samples[idx[k]] for k in far)
    return lines, unordered
