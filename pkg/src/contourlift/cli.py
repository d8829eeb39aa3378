"""Command-line front end: reconstruct, synth, contours, signs.

Runs are driven by a JSON manifest whose keys mirror the library parameters
(g, h, alpha, theta, c_q, c_p, c_e, eps_threshold, inner_l).  Weight-style
parameters accept either a constant or ``{"base": c, "regions": [{"mask":
path, "value": v}, ...]}`` with masks given as field CSV or PGM.  The input
block names exactly one of ``lines_csv`` or ``points_csv`` and may add
``pins_csv`` (isolated height anchors, also used by the point-ordering
presolve).  Paths in a manifest resolve relative to the manifest file.

Exit codes: 0 ok, 2 usage, 3 input parse error, 4 validation error, 5 I/O.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import fileio
from .fields import Grid2D, gradient
from .geometry import (determine_signs_adaptive, determine_signs_global,
                       extract_contours, normals_from_level_line,
                       order_via_isotropic, rasterize_constraints)
from .model import ConstraintSet, RegularizerWeights, SolverConfig, validate
from .solver import solve
from .synth import CASE_FACTORIES

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_VALIDATION = 4
EXIT_IO = 5

log = logging.getLogger("contourlift")


class ManifestError(Exception):
    """Manifest is structurally valid JSON but fails validation."""


@dataclass
class RunManifest:
    grid: Grid2D
    lines_csv: str | None = None
    points_csv: str | None = None
    pins_csv: str | None = None
    connect_threshold: float = 2.0
    g: object = 1.0                  # constant or region spec, resolved later
    h: object = 0.0
    theta: object = 1e5
    alpha: object = 1.0
    matching_mode: str = "normal"
    sign_strategy: str = "given"
    eps_threshold: float = 0.2
    config: SolverConfig = dc_field(default_factory=SolverConfig)
    out_dir: str = "."
    seed: int = 0
    base_dir: str = "."

    def resolve(self, rel: str) -> str:
        return os.path.join(self.base_dir, rel)


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ManifestError(msg)


def parse_manifest(doc: dict, base_dir: str) -> RunManifest:
    _require(isinstance(doc, dict), "manifest must be a JSON object")
    grid_spec = doc.get("grid")
    _require(isinstance(grid_spec, dict) and {"nx", "ny"} <= set(grid_spec),
             "manifest needs grid.nx and grid.ny")
    nx, ny = int(grid_spec["nx"]), int(grid_spec["ny"])
    _require(min(nx, ny) >= 16, "grid size must be at least 16")
    grid = Grid2D(nx, ny)

    inp = doc.get("input", {})
    _require(isinstance(inp, dict), "input must be an object")
    lines_csv = inp.get("lines_csv")
    points_csv = inp.get("points_csv")
    _require((lines_csv is None) != (points_csv is None),
             "input needs exactly one of lines_csv or points_csv")

    weights = doc.get("weights", {})
    _require(isinstance(weights, dict), "weights must be an object")

    signs = doc.get("signs", {"strategy": "given"})
    _require(isinstance(signs, dict), "signs must be an object")
    strategy = signs.get("strategy", "given")
    _require(strategy in ("given", "global", "adaptive"),
             f"unknown sign strategy {strategy!r}")

    pen = doc.get("penalties", {})
    sol = doc.get("solver", {})
    _require(isinstance(pen, dict) and isinstance(sol, dict),
             "penalties and solver must be objects")
    mode = doc.get("matching_mode", "normal")
    try:
        config = SolverConfig(
            c_q=float(pen.get("c_q", 50.0)),
            c_p=float(pen.get("c_p", 50.0)),
            c_e=float(pen.get("c_e", 50.0)),
            outer_max=int(sol.get("outer_max", 800)),
            inner_l=int(sol.get("inner_l", 1)),
            tol_rel_change=float(sol.get("tol_rel_change", 0.0)),
            pcg_tol=float(sol.get("pcg_tol", 1e-8)),
            pcg_max=None if sol.get("pcg_max") is None else int(sol["pcg_max"]),
            matching_mode=mode,
        )
    except (ValueError, TypeError) as exc:
        raise ManifestError(f"bad solver settings: {exc}") from None

    out = doc.get("output", {})
    _require(isinstance(out, dict) and "dir" in out, "output.dir is required")

    man = RunManifest(
        grid=grid,
        lines_csv=lines_csv,
        points_csv=points_csv,
        pins_csv=inp.get("pins_csv"),
        connect_threshold=float(inp.get("connect_threshold", 2.0)),
        g=weights.get("g", 1.0),
        h=weights.get("h", 0.0),
        theta=doc.get("theta", 1e5),
        alpha=doc.get("alpha", 1.0),
        matching_mode=mode,
        sign_strategy=strategy,
        eps_threshold=float(signs.get("eps_threshold", 0.2)),
        config=config,
        out_dir=out["dir"],
        seed=int(doc.get("seed", 0)),
        base_dir=base_dir,
    )
    for path in (man.lines_csv, man.points_csv, man.pins_csv):
        if path is not None and not os.path.exists(man.resolve(path)):
            raise FileNotFoundError(man.resolve(path))
    return man


def build_weight_field(spec, grid: Grid2D, manifest: RunManifest,
                       name: str) -> np.ndarray:
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return np.full(grid.shape, float(spec))
    _require(isinstance(spec, dict) and "base" in spec,
             f"{name} must be a number or {{base, regions}}")
    out = np.full(grid.shape, float(spec["base"]))
    for region in spec.get("regions", []):
        _require(isinstance(region, dict) and {"mask", "value"} <= set(region),
                 f"{name} region needs mask and value")
        mask = fileio.read_mask(manifest.resolve(region["mask"]))
        _require(mask.shape == grid.shape,
                 f"{name} mask shape {mask.shape} does not match grid")
        out[mask] = float(region["value"])
    return out


def load_manifest(path: str) -> RunManifest:
    doc = fileio.read_json(path)
    return parse_manifest(doc, os.path.dirname(os.path.abspath(path)))


def _scatter_heights(samples, theta_field: np.ndarray,
                     grid: Grid2D) -> ConstraintSet:
    cs = ConstraintSet.empty(grid)
    for s in samples:
        i, j = int(np.floor(s.x + 0.5)), int(np.floor(s.y + 0.5))
        if 0 <= i < grid.nx and 0 <= j < grid.ny and theta_field[j, i] > 0.0:
            cs.height_mask[j, i] = True
            cs.heights[j, i] = s.level
            cs.height_weight[j, i] = theta_field[j, i]
    return cs


def _apply_pins(cs: ConstraintSet, pins: list, grid: Grid2D) -> None:
    for x, y, value, weight in pins:
        i, j = int(np.floor(x + 0.5)), int(np.floor(y + 0.5))
        if not (0 <= i < grid.nx and 0 <= j < grid.ny):
            raise ManifestError(f"pin ({x}, {y}) falls outside the grid")
        if weight <= 0.0:
            raise ManifestError("pin weights must be positive")
        cs.height_mask[j, i] = True
        cs.heights[j, i] = value
        cs.height_weight[j, i] = weight


def build_constraints(man: RunManifest, weights: RegularizerWeights
                      ) -> tuple[ConstraintSet, dict]:
    theta = build_weight_field(man.theta, man.grid, man, "theta")
    alpha = build_weight_field(man.alpha, man.grid, man, "alpha")
    pins = ([] if man.pins_csv is None
            else fileio.read_pins_csv(man.resolve(man.pins_csv)))
    info: dict = {}
    if man.lines_csv is not None:
        lines = fileio.read_lines_csv(man.resolve(man.lines_csv))
        lines = [ln if ln.normals is not None or len(ln.points) < 2
                 else normals_from_level_line(ln) for ln in lines]
        info["lines"] = len(lines)
    else:
        samples = fileio.read_points_csv(man.resolve(man.points_csv))
        pre = _scatter_heights(samples, theta, man.grid)
        _apply_pins(pre, pins, man.grid)
        iso_height, _ = solve(pre, weights, man.config)
        lines, leftover = order_via_isotropic(samples, iso_height,
                                              man.connect_threshold)
        lines = [normals_from_level_line(ln) if len(ln.points) >= 2 else ln
                 for ln in lines]
        info["lines"] = len(lines)
        info["unordered_samples"] = len(leftover)
        log.info("ordered %d samples into %d lines (%d left unordered)",
                 len(samples), len(lines), len(leftover))
    cs, collisions = rasterize_constraints(lines, theta, alpha, man.grid)
    _apply_pins(cs, pins, man.grid)
    if pins:
        info["pins"] = len(pins)
    info["collisions"] = len(collisions)
    if collisions:
        log.warning("%d conflicting constraint cells (first: %s)",
                    len(collisions), collisions[0])
    return cs, info


def apply_sign_strategy(man: RunManifest, cs: ConstraintSet,
                        weights: RegularizerWeights):
    if man.sign_strategy == "global":
        return determine_signs_global(cs, weights, man.config)
    if man.sign_strategy == "adaptive":
        return determine_signs_adaptive(cs, weights, man.config,
                                        eps_threshold=man.eps_threshold)
    return cs, None


def cmd_reconstruct(args) -> int:
    man = load_manifest(args.manifest)
    weights = RegularizerWeights(
        grid=man.grid,
        g=build_weight_field(man.g, man.grid, man, "g"),
        h=build_weight_field(man.h, man.grid, man, "h"))
    cs, info = build_constraints(man, weights)
    cs, sign_report = apply_sign_strategy(man, cs, weights)
    problems = validate(cs, weights)
    if problems:
        for p in problems:
            print(f"validation: {p}", file=sys.stderr)
        return EXIT_VALIDATION

    t0 = time.perf_counter()
    height, diag = solve(cs, weights, man.config)
    wall = time.perf_counter() - t0

    out_dir = man.resolve(man.out_dir)
    os.makedirs(out_dir, exist_ok=True)
    fileio.write_field_csv(os.path.join(out_dir, "height.csv"), height)
    scale = fileio.write_pgm16(os.path.join(out_dir, "height.pgm"), height)
    fileio.write_obj(os.path.join(out_dir, "mesh.obj"), height)
    fileio.write_jsonl_log(os.path.join(out_dir, "log.jsonl"), diag)
    summary = {
        "energy": diag.energy[-1],
        "residuals": {"slope": diag.res_slope[-1],
                      "smooth": diag.res_smooth[-1],
                      "curvature": diag.res_curv[-1]},
        "iterations": diag.iterations,
        "converged": diag.converged,
        "wall_time_s": wall,
        "pgm_scale": scale,
        "grid": {"nx": man.grid.nx, "ny": man.grid.ny},
        "seed": man.seed,
        "input": info,
    }
    if sign_report is not None:
        summary["sign_rounds"] = sign_report.rounds
        if sign_report.warning:
            summary["sign_warning"] = sign_report.warning
    fileio.write_summary_json(os.path.join(out_dir, "summary.json"), summary)
    log.info("reconstructed %dx%d in %.2fs, energy %.6g",
             man.grid.ny, man.grid.nx, wall, diag.energy[-1])
    return EXIT_OK


def cmd_synth(args) -> int:
    factory = CASE_FACTORIES[args.case]
    kwargs = {}
    if args.contours is not None:
        if args.case != "semisphere":
            print("--contours only applies to semisphere", file=sys.stderr)
            return EXIT_USAGE
        kwargs["contours"] = args.contours
    case = factory(args.n, **kwargs) if args.n else factory(**kwargs)

    os.makedirs(args.out_dir, exist_ok=True)
    fileio.write_field_csv(os.path.join(args.out_dir, "truth.csv"),
                           case.ground_truth)
    for k, (line, up) in enumerate(zip(case.lines, case.up_slopes)):
        normals = line.normals.copy()
        flip = np.sum(normals * up, axis=1) < 0.0
        normals[flip] *= -1.0
        out_line = type(line)(level=line.level, points=line.points,
                              closed=line.closed, normals=normals)
        fileio.write_lines_csv(
            os.path.join(args.out_dir, f"line_{k:02d}.csv"), [out_line])
    if case.extra_heights:
        with open(os.path.join(args.out_dir, "pins.csv"), "w") as fh:
            fh.write("x,y,value,weight\n")
            for i, j, value, weight in case.extra_heights:
                fh.write(f"{i},{j},{repr(float(value))},{repr(float(weight))}\n")

    preset = {
        "case": case.name,
        "grid": {"nx": case.grid.nx, "ny": case.grid.ny},
        "levels": [float(v) for v in case.level_values],
        "alpha": case.alpha if np.isscalar(case.alpha)
        else [float(a) for a in np.ravel(case.alpha)],
        "theta": case.theta if np.isscalar(case.theta)
        else [float(t) for t in np.ravel(case.theta)],
        "g_constant": (float(case.weights.g.flat[0])
                       if np.ptp(case.weights.g) == 0 else None),
        "h_constant": (float(case.weights.h.flat[0])
                       if np.ptp(case.weights.h) == 0 else None),
        "eps_threshold": case.eps_threshold,
        "penalties": {"c_q": case.config.c_q, "c_p": case.config.c_p,
                      "c_e": case.config.c_e},
        "solver": {"outer_max": case.config.outer_max,
                   "inner_l": case.config.inner_l},
        "lines": len(case.lines),
    }
    if preset["g_constant"] is None:
        fileio.write_field_csv(os.path.join(args.out_dir, "g.csv"),
                               case.weights.g)
    if preset["h_constant"] is None:
        fileio.write_field_csv(os.path.join(args.out_dir, "h.csv"),
                               case.weights.h)
    fileio.write_summary_json(os.path.join(args.out_dir, "case.json"), preset)
    return EXIT_OK


def cmd_contours(args) -> int:
    field = fileio.read_field_csv(args.field)
    lines = extract_contours(field, args.levels)
    fileio.write_lines_csv(args.out, lines)
    return EXIT_OK


def cmd_signs(args) -> int:
    man = load_manifest(args.manifest)
    weights = RegularizerWeights(
        grid=man.grid,
        g=build_weight_field(man.g, man.grid, man, "g"),
        h=build_weight_field(man.h, man.grid, man, "h"))
    cs, info = build_constraints(man, weights)
    strategy = man.sign_strategy if man.sign_strategy != "given" else "global"
    if strategy == "global":
        signed, report = determine_signs_global(cs, weights, man.config)
    else:
        signed, report = determine_signs_adaptive(cs, weights, man.config,
                                                  eps_threshold=man.eps_threshold)
    out_dir = man.resolve(man.out_dir)
    os.makedirs(out_dir, exist_ok=True)
    ys, xs = np.nonzero(signed.normal_mask)
    with open(os.path.join(out_dir, "signed_normals.csv"), "w") as fh:
        fh.write("x,y,normal_x,normal_y\n")
        for j, i in zip(ys, xs):
            fh.write(f"{i},{j},{repr(float(signed.normals[0][j, i]))},"
                     f"{repr(float(signed.normals[1][j, i]))}\n")
    # report rows cover the pre-strategy mask, so cells the adaptive pass
    # dropped still show up (with admitted_round -1)
    ys, xs = np.nonzero(cs.normal_mask)
    with open(os.path.join(out_dir, "sign_report.csv"), "w") as fh:
        fh.write("x,y,rho,strength,admitted_round,flipped\n")
        for j, i in zip(ys, xs):
            fh.write(f"{i},{j},{repr(float(report.alignment[j, i]))},"
                     f"{repr(float(report.strength[j, i]))},"
                     f"{int(report.admitted_round[j, i])},"
                     f"{int(report.flipped[j, i])}\n")
    summary = {
        "strategy": strategy,
        "rounds": report.rounds,
        "cells": int(signed.normal_mask.sum()),
        "flipped": int(report.flipped.sum()),
        "never_admitted": int(((report.admitted_round == -1)
                               & cs.normal_mask).sum()),
        "input": info,
        "seed": man.seed,
    }
    if report.warning:
        summary["warning"] = report.warning
        log.warning("%s", report.warning)
    fileio.write_summary_json(os.path.join(out_dir, "sign_summary.json"),
                              summary)
    return EXIT_OK


def _levels_arg(text: str) -> list:
    try:
        return [float(t) for t in text.split(",") if t.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad level list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="contourlift",
        description="Height-field reconstruction from sparse level lines.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reconstruct", help="run a reconstruction manifest")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("synth", help="materialize a synthetic case")
    p.add_argument("case", choices=sorted(CASE_FACTORIES))
    p.add_argument("out_dir")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--contours", type=int, default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("contours", help="extract level lines from a field CSV")
    p.add_argument("field")
    p.add_argument("out")
    p.add_argument("--levels", type=_levels_arg, required=True)
    p.set_defaults(func=cmd_contours)

    p = sub.add_parser("signs", help="run sign determination only")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_signs)
    return ap


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("CONTOURLIFT_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except fileio.FileFormatError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ManifestError as exc:
        print(f"invalid manifest: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ValueError, FloatingPointError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
