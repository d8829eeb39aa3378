"""Plain-file formats for fields, level lines, profiles, meshes and logs.

Everything is kept to formats a person can inspect without extra tooling:
headered comma CSV with '.' decimals, 16-bit big-endian P5 PGM, Wavefront
OBJ, and JSON/JSONL.  Floats are written with ``repr`` round-tripping, so a
rerun with identical inputs produces byte-identical text files.
"""

from __future__ import annotations

import csv
import json

import numpy as np

from .geometry import LevelLine, PointCloudSample


class FileFormatError(Exception):
    """Raised when an input file does not parse as the expected format."""


def _fmt(v) -> str:
    return repr(float(v))


def write_field_csv(path, field: np.ndarray) -> None:
    field = np.asarray(field, dtype=float)
    if field.ndim != 2:
        raise ValueError("field must be 2D")
    ny, nx = field.shape
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "value"])
        for j in range(ny):
            for i in range(nx):
                w.writerow([i, j, _fmt(field[j, i])])


def read_field_csv(path) -> np.ndarray:
    rows = _read_csv_rows(path, {"x", "y", "value"})
    try:
        xs = np.array([int(r["x"]) for r in rows])
        ys = np.array([int(r["y"]) for r in rows])
        vals = np.array([float(r["value"]) for r in rows])
    except ValueError as exc:
        raise FileFormatError(f"{path}: non-numeric field row: {exc}") from None
    if xs.size == 0:
        raise FileFormatError(f"{path}: empty field file")
    nx, ny = xs.max() + 1, ys.max() + 1
    if xs.min() < 0 or ys.min() < 0:
        raise FileFormatError(f"{path}: negative grid index")
    field = np.full((ny, nx), np.nan)
    field[ys, xs] = vals
    if np.isnan(field).any():
        raise FileFormatError(f"{path}: field does not cover the full grid")
    return field


def _read_csv_rows(path, required: set) -> list:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise FileFormatError(f"{path}: missing CSV header")
        missing = required - set(reader.fieldnames)
        if missing:
            raise FileFormatError(f"{path}: missing columns {sorted(missing)}")
        return list(reader)


def write_lines_csv(path, lines) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["line_id", "level", "closed", "x", "y",
                    "normal_x", "normal_y"])
        for lid, line in enumerate(lines):
            for p in range(line.points.shape[0]):
                if line.normals is None:
                    nx_, ny_ = "", ""
                else:
                    nx_ = _fmt(line.normals[p, 0])
                    ny_ = _fmt(line.normals[p, 1])
                w.writerow([lid, _fmt(line.level), int(line.closed),
                            _fmt(line.points[p, 0]), _fmt(line.points[p, 1]),
                            nx_, ny_])


def read_lines_csv(path) -> list:
    rows = _read_csv_rows(path, {"line_id", "level", "closed", "x", "y"})
    by_id: dict = {}
    order = []
    for r in rows:
        try:
            lid = int(r["line_id"])
            rec = (float(r["level"]), bool(int(r["closed"])),
                   float(r["x"]), float(r["y"]),
                   r.get("normal_x") or None, r.get("normal_y") or None)
        except ValueError as exc:
            raise FileFormatError(f"{path}: bad line row: {exc}") from None
        if lid not in by_id:
            by_id[lid] = []
            order.append(lid)
        by_id[lid].append(rec)
    lines = []
    for lid in order:
        recs = by_id[lid]
        levels = {rec[0] for rec in recs}
        if len(levels) != 1:
            raise FileFormatError(f"{path}: line {lid} mixes levels {levels}")
        pts = np.array([[rec[2], rec[3]] for rec in recs])
        has_n = [rec[4] is not None and rec[5] is not None for rec in recs]
        normals = None
        if all(has_n):
            try:
                normals = np.array([[float(rec[4]), float(rec[5])]
                                    for rec in recs])
            except ValueError as exc:
                raise FileFormatError(f"{path}: bad normal: {exc}") from None
        elif any(has_n):
            raise FileFormatError(f"{path}: line {lid} has partial normals")
        lines.append(LevelLine(level=recs[0][0], points=pts,
                               closed=recs[0][1], normals=normals))
    return lines


def write_points_csv(path, samples) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "level"])
        for s in samples:
            w.writerow([_fmt(s.x), _fmt(s.y), _fmt(s.level)])


def read_points_csv(path) -> list:
    rows = _read_csv_rows(path, {"x", "y", "level"})
    try:
        return [PointCloudSample(float(r["x"]), float(r["y"]),
                                 float(r["level"])) for r in rows]
    except ValueError as exc:
        raise FileFormatError(f"{path}: bad point row: {exc}") from None


def read_pins_csv(path) -> list:
    """Isolated height anchors as (x, y, value, weight) tuples."""
    rows = _read_csv_rows(path, {"x", "y", "value", "weight"})
    try:
        return [(float(r["x"]), float(r["y"]), float(r["value"]),
                 float(r["weight"])) for r in rows]
    except ValueError as exc:
        raise FileFormatError(f"{path}: bad pin row: {exc}") from None


def write_profile_csv(path, values) -> None:
    values = np.asarray(values, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "value"])
        for i, v in enumerate(values):
            w.writerow([i, _fmt(v)])


def read_profile_csv(path) -> np.ndarray:
    rows = _read_csv_rows(path, {"index", "value"})
    try:
        idx = np.array([int(r["index"]) for r in rows])
        vals = np.array([float(r["value"]) for r in rows])
    except ValueError as exc:
        raise FileFormatError(f"{path}: bad profile row: {exc}") from None
    if idx.size == 0 or not np.array_equal(np.sort(idx), np.arange(idx.size)):
        raise FileFormatError(f"{path}: profile indices must be 0..n-1")
    out = np.empty(idx.size)
    out[idx] = vals
    return out


def write_pgm16(path, field: np.ndarray) -> dict:
    """Min-max scale to the full 16-bit range; returns the scaling used."""
    field = np.asarray(field, dtype=float)
    lo, hi = float(field.min()), float(field.max())
    if hi > lo:
        scaled = np.round((field - lo) / (hi - lo) * 65535.0)
    else:
        scaled = np.zeros_like(field)
    ny, nx = field.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{nx} {ny}\n65535\n".encode("ascii"))
        fh.write(scaled.astype(">u2").tobytes())
    return {"min": lo, "max": hi, "maxval": 65535}


def read_pgm16(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    fields = []
    pos = 0
    while len(fields) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    if fields[0] != b"P5":
        raise FileFormatError(f"{path}: not a P5 PGM")
    try:
        nx, ny, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    except ValueError:
        raise FileFormatError(f"{path}: bad PGM header") from None
    if maxval != 65535:
        raise FileFormatError(f"{path}: expected 16-bit maxval, got {maxval}")
    pos += 1  # single whitespace after maxval
    if len(data) - pos < 2 * nx * ny:
        raise FileFormatError(f"{path}: truncated PGM pixel data")
    raw = np.frombuffer(data, dtype=">u2", count=nx * ny, offset=pos)
    return raw.reshape(ny, nx).astype(np.uint16)


def read_mask(path) -> np.ndarray:
    """Boolean mask from a field CSV or a PGM: nonzero means selected."""
    text = str(path)
    if text.endswith(".pgm"):
        return read_pgm16(path) != 0
    return read_field_csv(path) != 0.0


def write_obj(path, field: np.ndarray) -> None:
    """Height-field mesh: one vertex per cell, two triangles per cell quad."""
    field = np.asarray(field, dtype=float)
    ny, nx = field.shape
    out = []
    for j in range(ny):
        for i in range(nx):
            out.append(f"v {i} {j} {_fmt(field[j, i])}")
    for j in range(ny - 1):
        for i in range(nx - 1):
            a = j * nx + i + 1          # OBJ indices are 1-based
            b, c_, d = a + 1, a + nx, a + nx + 1
            out.append(f"f {a} {b} {d}")
            out.append(f"f {a} {d} {c_}")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")


def write_jsonl_log(path, diagnostics) -> None:
    with open(path, "w") as fh:
        for k in range(diagnostics.iterations):
            rec = {"iteration": k + 1,
                   "energy": diagnostics.energy[k],
                   "res_slope": diagnostics.res_slope[k],
                   "res_smooth": diagnostics.res_smooth[k],
                   "res_curv": diagnostics.res_curv[k],
                   "rel_change": diagnostics.rel_change[k],
                   "pcg_iterations": diagnostics.pcg_iterations[k]}
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def write_summary_json(path, summary: dict) -> None:
    with open(path, "w") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
        fh.write("\n")


def read_json(path) -> dict:
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise FileFormatError(f"{path}: invalid JSON: {exc}") from None
