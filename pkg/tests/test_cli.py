import json
import subprocess
import sys

import numpy as np
import pytest

from legendrian import io
from legendrian.cli import main
from legendrian.dynamics import curve_samples_r3
from legendrian.fixtures import torus_curve


def run(tmp_path, *argv, name="report.json"):
    code = main([*argv, "--out", str(tmp_path)])
    path = tmp_path / name
    return code, (json.loads(path.read_text()) if path.exists() else None)


def test_build_unknot_and_verify_output(tmp_path):
    code, rep = run(tmp_path, "build", "fixture:unknot", "--degree", "64", "--samples", "512")
    assert code == 0
    assert rep["crossings_after_rm1"] == 0 and rep["determinant"] == 1 and rep["residuals_ok"]
    for f in ("diagram.svg", "curve.json", "curve_r3.json", "curve.csv"):
        assert (tmp_path / f).exists()
    code, ver = run(tmp_path / "v", "verify", str(tmp_path / "curve.json"))
    assert code == 0 and ver["ok"]


def test_build_is_deterministic(tmp_path):
    run(tmp_path / "a", "build", "fixture:unknot", "--degree", "64", "--samples", "512")
    run(tmp_path / "b", "build", "fixture:unknot", "--degree", "64", "--samples", "512")
    for f in ("report.json", "curve.json", "curve.csv", "diagram.svg"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_tangential_crossing_exits_nonzero(tmp_path):
    code, err = run(tmp_path, "build", "fixture:tacnode", name="error.json")
    assert code == 1 and err["error"] == "TangentialCrossing"


def test_unknown_fixture_is_usage_error(tmp_path):
    assert main(["verify", "fixture:nope", "--out", str(tmp_path)]) == 2


def test_missing_file_exits_nonzero(tmp_path):
    assert main(["verify", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 1


def test_verify_torus(tmp_path):
    code, rep = run(tmp_path, "verify", "fixture:torus")
    assert code == 0
    assert max(rep["residual_sphere"], rep["residual_real"], rep["residual_imag"]) <= 1e-12


def test_verify_localises_edited_coefficient(tmp_path):
    src = tmp_path / "torus.json"
    io.write_s3curve(src, torus_curve())
    data = json.loads(src.read_text())
    data["numerators"][2]["cos"][1] += 1e-3
    src.write_text(json.dumps(data))
    code, rep = run(tmp_path, "verify", str(src))
    assert code == 1
    assert rep["violations"] and {v["check"] for v in rep["violations"]} >= {"sphere"}
    assert (tmp_path / "error.json").exists()


def test_solve_g_torus(tmp_path):
    code, rep = run(tmp_path, "solve-g", "fixture:torus", "--n", "3")
    assert code == 0
    assert rep["dimensions"] == "37 × 16" and rep["n_candidates"] >= 1
    assert all(r["max_abs_on_curve"] <= 1e-6 for r in rep["candidates"])
    assert (tmp_path / "G_0.csv").exists()


def test_solve_g_constant_degree(tmp_path):
    code, rep = run(tmp_path, "solve-g", "fixture:torus", "--n", "0")
    assert code == 0 and rep["n_candidates"] == 0


def test_solve_h_torus(tmp_path):
    code, rep = run(tmp_path, "solve-h", "fixture:torus", "--n", "3", "--export-system")
    assert code == 0
    assert rep["lsq_residual"] <= 1e-6 and rep["parallelism"] <= 1e-4
    assert (tmp_path / "A.mtx").exists() and (tmp_path / "y.mtx").exists()


def test_solve_h_degree_too_small(tmp_path):
    code, err = run(tmp_path, "solve-h", "fixture:torus", "--n", "1", name="error.json")
    assert code == 1 and err["error"] == "DegreeTooSmall"


def test_evolve_time_zero(tmp_path):
    code, rep = run(tmp_path, "evolve", "fixture:torus", "--times", "0", "--samples", "32", "--no-escape")
    assert code == 0 and len(rep["frames"]) == 1
    frames = io.read_json(tmp_path / "frames.json")["frames"]
    assert np.allclose(frames[0]["points"], curve_samples_r3(torus_curve(), 32))


def test_evolve_figure8(tmp_path):
    code, rep = run(tmp_path, "evolve", "fixture:figure8-degree11", "--times", "0,1e6", "--samples", "128")
    assert code == 0
    assert rep["frames"][1]["mean_z"] < -1e5
    assert rep["T_plus"] <= 1e4 and rep["T_minus"] <= 1e4


def test_evolve_is_deterministic(tmp_path):
    args = ("evolve", "fixture:figure8-degree11", "--times=-2,0,2", "--samples", "64", "--no-escape")
    run(tmp_path / "a", *args)
    run(tmp_path / "b", *args)
    for f in ("report.json", "frames.csv", "frames.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_export_curve_with_system(tmp_path):
    code, rep = run(tmp_path, "export", "fixture:torus", "--n", "3", name="export.json")
    assert code == 0
    names = sorted(p.split("/")[-1] for p in rep["files"])
    assert names == ["torus.csv", "torus.json", "torus.svg", "torus_A.mtx", "torus_y.mtx"]


def test_export_diagram(tmp_path):
    code, rep = run(tmp_path, "export", "fixture:figure8", name="export.json")
    assert code == 0 and len(rep["files"]) == 2


def test_console_script_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "legendrian.cli", "verify", "fixture:torus",
                        "--out", str(tmp_path)], capture_output=True, text=True)
    assert r.returncode == 0 and "residual_real:" in r.stdout


@pytest.mark.slow
def test_build_figure8_signature(tmp_path):
    code, rep = run(tmp_path, "build", "fixture:figure8")
    assert code == 0
    # the diagram fixture realises nine crossings; RM1 alone does not reach the minimal four
    assert rep["determinant"] == 5
