"""Round trips and format validation for the file helpers."""

import json

import numpy as np
import pytest

from contourlift.fileio import (FileFormatError, read_field_csv, read_json,
                                read_lines_csv, read_mask, read_pgm16,
                                read_pins_csv, read_points_csv,
                                read_profile_csv, write_field_csv,
                                write_jsonl_log, write_lines_csv, write_obj,
                                write_pgm16, write_points_csv,
                                write_profile_csv, write_summary_json)
from contourlift.geometry import LevelLine, PointCloudSample
from contourlift.solver import Diagnostics

rng = np.random.default_rng(3)


def test_field_csv_round_trip(tmp_path):
    field = rng.standard_normal((5, 7))
    p = tmp_path / "f.csv"
    write_field_csv(p, field)
    assert np.array_equal(read_field_csv(p), field)


def test_field_csv_writes_are_bit_identical(tmp_path):
    field = rng.standard_normal((4, 4)) * 1e-7
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_field_csv(a, field)
    write_field_csv(b, field)
    assert a.read_bytes() == b.read_bytes()


def test_field_csv_rejects_holes_and_junk(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("x,y,value\n0,0,1.0\n1,1,2.0\n")
    with pytest.raises(FileFormatError):
        read_field_csv(p)
    p.write_text("x,y,value\n0,0,abc\n")
    with pytest.raises(FileFormatError):
        read_field_csv(p)
    p.write_text("")
    with pytest.raises(FileFormatError):
        read_field_csv(p)


def test_lines_csv_round_trip_with_normals(tmp_path):
    th = np.linspace(0.0, 2.0 * np.pi, 9)[:-1]
    pts = np.column_stack([np.cos(th), np.sin(th)]) * 3.0 + 5.0
    normals = np.column_stack([np.cos(th), np.sin(th)])
    lines = [LevelLine(level=1.5, points=pts, closed=True, normals=normals),
             LevelLine(level=2.5, points=pts[:4] + 1.0, closed=False)]
    p = tmp_path / "lines.csv"
    write_lines_csv(p, lines)
    got = read_lines_csv(p)
    assert len(got) == 2
    assert got[0].level == 1.5 and got[0].closed
    assert np.array_equal(got[0].points, pts)
    assert np.array_equal(got[0].normals, normals)
    assert got[1].normals is None and not got[1].closed


def test_lines_csv_rejects_partial_normals_and_mixed_levels(tmp_path):
    p = tmp_path / "lines.csv"
    p.write_text("line_id,level,closed,x,y,normal_x,normal_y\n"
                 "0,1.0,0,0.0,0.0,1.0,0.0\n"
                 "0,1.0,0,1.0,0.0,,\n")
    with pytest.raises(FileFormatError):
        read_lines_csv(p)
    p.write_text("line_id,level,closed,x,y,normal_x,normal_y\n"
                 "0,1.0,0,0.0,0.0,,\n"
                 "0,2.0,0,1.0,0.0,,\n")
    with pytest.raises(FileFormatError):
        read_lines_csv(p)
    p.write_text("not,a,header\n1,2,3\n")
    with pytest.raises(FileFormatError):
        read_lines_csv(p)


def test_points_csv_round_trip(tmp_path):
    samples = [PointCloudSample(1.25, 2.5, 3.0),
               PointCloudSample(-0.5, 0.0, 3.0)]
    p = tmp_path / "pts.csv"
    write_points_csv(p, samples)
    assert read_points_csv(p) == samples


def test_pins_csv_parses_and_validates(tmp_path):
    p = tmp_path / "pins.csv"
    p.write_text("x,y,value,weight\n3,4,1.5,100000.0\n0,0,0.0,1.0\n")
    assert read_pins_csv(p) == [(3.0, 4.0, 1.5, 100000.0),
                                (0.0, 0.0, 0.0, 1.0)]
    p.write_text("x,y,value,weight\n3,4,oops,1.0\n")
    with pytest.raises(FileFormatError):
        read_pins_csv(p)


def test_profile_csv_round_trip_and_order(tmp_path):
    vals = rng.standard_normal(12)
    p = tmp_path / "prof.csv"
    write_profile_csv(p, vals)
    assert np.array_equal(read_profile_csv(p), vals)
    # shuffled indices still reconstruct by position
    rows = p.read_text().strip().split("\n")
    p.write_text("\n".join([rows[0]] + rows[1:][::-1]) + "\n")
    assert np.array_equal(read_profile_csv(p), vals)
    p.write_text("index,value\n0,1.0\n2,2.0\n")
    with pytest.raises(FileFormatError):
        read_profile_csv(p)


def test_pgm_round_trip_and_scaling(tmp_path):
    field = np.array([[0.0, 1.0], [2.0, 4.0]])
    p = tmp_path / "h.pgm"
    scale = write_pgm16(p, field)
    assert scale == {"min": 0.0, "max": 4.0, "maxval": 65535}
    img = read_pgm16(p)
    assert img.dtype == np.uint16 and img.shape == (2, 2)
    assert img[0, 0] == 0 and img[1, 1] == 65535
    assert img[0, 1] == round(65535 / 4)


def test_pgm_constant_field_is_all_zero(tmp_path):
    p = tmp_path / "c.pgm"
    write_pgm16(p, np.full((3, 3), 7.0))
    assert np.all(read_pgm16(p) == 0)


def test_pgm_rejects_bad_headers(tmp_path):
    p = tmp_path / "bad.pgm"
    p.write_bytes(b"P2\n2 2\n65535\n")
    with pytest.raises(FileFormatError):
        read_pgm16(p)
    p.write_bytes(b"P5\n2 2\n255\n" + bytes(4))
    with pytest.raises(FileFormatError):
        read_pgm16(p)
    p.write_bytes(b"P5\n2 2\n65535\n\x00\x00")
    with pytest.raises(FileFormatError):
        read_pgm16(p)


def test_read_mask_from_csv_and_pgm(tmp_path):
    field = np.array([[0.0, 2.0], [0.5, 0.0]])
    csv_p = tmp_path / "m.csv"
    write_field_csv(csv_p, field)
    assert np.array_equal(read_mask(csv_p), field != 0.0)
    pgm_p = tmp_path / "m.pgm"
    write_pgm16(pgm_p, field)
    assert np.array_equal(read_mask(pgm_p), field != 0.0)


def test_obj_mesh_structure(tmp_path):
    field = np.arange(6.0).reshape(2, 3)
    p = tmp_path / "m.obj"
    write_obj(p, field)
    text = p.read_text().strip().split("\n")
    verts = [l for l in text if l.startswith("v ")]
    faces = [l for l in text if l.startswith("f ")]
    assert len(verts) == 6
    assert len(faces) == 2 * (2 - 1) * (3 - 1)
    assert verts[0] == "v 0 0 0.0"
    for f in faces:
        idx = [int(tok) for tok in f.split()[1:]]
        assert len(idx) == 3 and all(1 <= k <= 6 for k in idx)


def test_jsonl_log_one_record_per_iteration(tmp_path):
    diag = Diagnostics(energy=[3.0, 2.0], res_slope=[0.5, 0.25],
                       res_smooth=[0.4, 0.2], res_curv=[0.3, 0.15],
                       rel_change=[1.0, 0.5], pcg_iterations=[7, 3])
    p = tmp_path / "log.jsonl"
    write_jsonl_log(p, diag)
    records = [json.loads(line) for line in p.read_text().strip().split("\n")]
    assert len(records) == 2
    assert records[0]["iteration"] == 1 and records[1]["iteration"] == 2
    assert records[1] == {"iteration": 2, "energy": 2.0, "res_slope": 0.25,
                          "res_smooth": 0.2, "res_curv": 0.15,
                          "rel_change": 0.5, "pcg_iterations": 3}


def test_summary_json_round_trip(tmp_path):
    p = tmp_path / "s.json"
    write_summary_json(p, {"b": 1, "a": [1.5, None]})
    assert read_json(p) == {"b": 1, "a": [1.5, None]}
    p.write_text("{not json")
    with pytest.raises(FileFormatError):
        read_json(p)
