import numpy as np

from legendrian import io
from legendrian.dynamics import evolve_frames
from legendrian.fixtures import figure8_diagram, torus_curve
from legendrian.tangency import PolyC2, assemble_A, assemble_y
from legendrian.trigpoly import TWO_PI


def test_json_is_canonical(tmp_path):
    a = io.write_json(tmp_path / "a.json", {"b": np.float64(1.5), "a": np.arange(3), "c": (1, 2)})
    text = a.read_text()
    assert text.index('"a"') < text.index('"b"')
    assert io.read_json(a) == {"a": [0, 1, 2], "b": 1.5, "c": [1, 2]}


def test_curve_and_diagram_roundtrip(tmp_path):
    c = torus_curve()
    back = io.read_s3curve(io.write_s3curve(tmp_path / "c.json", c))
    t = np.linspace(0, TWO_PI, 11)
    assert np.array_equal(back.coords(t), c.coords(t))
    d = figure8_diagram()
    dd = io.read_diagram(io.write_diagram(tmp_path / "d.json", d))
    assert dd.target == d.target
    assert np.array_equal(dd.X(t), d.X(t))


def test_candidate_table_roundtrip(tmp_path):
    g = PolyC2.from_terms({(2, 3): 1.0, (0, 0): -0.5 + 0.25j}, 3)
    back = io.read_candidate_table(io.write_candidate_table(tmp_path / "g.csv", g), 3)
    assert np.array_equal(back.coeffs, g.coeffs)


def test_curve_csv(tmp_path):
    header, rows = io.read_table(io.write_curve_csv(tmp_path / "c.csv", torus_curve(), 16))
    assert header == ["t", "x1", "y1", "x2", "y2"] and len(rows) == 16


def test_system_matrix_market(tmp_path):
    from scipy.io import mmread

    c = torus_curve()
    sys = assemble_y(c, 3, assemble_A(c, 3))
    io.write_system(tmp_path / "A.mtx", tmp_path / "y.mtx", sys)
    assert np.allclose(mmread(str(tmp_path / "A.mtx")), sys.A)
    assert np.allclose(np.ravel(mmread(str(tmp_path / "y.mtx"))), sys.y)


def test_frames_exports(tmp_path):
    frames = evolve_frames(torus_curve(), [0.0, 1.0], 8)
    header, rows = io.read_table(io.write_frames_csv(tmp_path / "f.csv", frames))
    assert header == ["t", "index", "x", "y", "z", "converged"] and len(rows) == 16
    data = io.read_json(io.write_frames_json(tmp_path / "f.json", frames))
    assert len(data["frames"]) == 2


def test_svg_output(tmp_path):
    p = io.write_diagram_svg(tmp_path / "d.svg", figure8_diagram(), 256)
    import xml.etree.ElementTree as ET

    root = ET.parse(p).getroot()
    assert root.tag.endswith("svg")
    shapes = [e for e in root if e.tag.endswith(("polygon", "polyline"))]
    assert len(shapes) == 1 and len(shapes[0].get("points").split()) == 256
