import csv
import json

import pytest

from resonance_lab.cli import main
from resonance_lab.carving import EgorovCertificate


def _write(tmp_path, obj, name="sc.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj, indent=2))
    return str(p)


def test_spectrum_grid_identity(tmp_path, capsys):
    sc = _write(tmp_path, {"model": {"kind": "finite", "h0": [[0]], "J": [[1]]},
                           "experiment": {"type": "spectrum-grid",
                                          "points": [[0.1, 0.5], [0.3, 1.0], [-0.2, 0.2]]}})
    assert main(["run", sc, "--out", str(tmp_path / "out")]) == 0
    rows = list(csv.DictReader(open(tmp_path / "out" / "trajectories.csv")))
    assert len(rows) == 3
    for r in rows:
        assert abs(float(r["re_r"]) - float(r["re_z"])) < 1e-12
        assert abs(float(r["im_r"]) - float(r["im_z"])) < 1e-12
        assert r["status"] == "ok"
    report = json.load(open(tmp_path / "out" / "report.json"))
    assert report["all_checks_passed"]
    assert (tmp_path / "out" / "r_plane.svg").read_text().startswith("<svg")


def test_impacting_embedded_block(tmp_path):
    sc = _write(tmp_path, {"model": {"kind": "embedded_block", "lambda0": 0, "v": 1},
                           "experiment": {"type": "impacting", "lambdas": [0.3]}})
    assert main(["run", sc, "--out", str(tmp_path)]) == 0
    report = json.load(open(tmp_path / "report.json"))
    (s,) = report["runs"][0]["result"]["sets"]
    assert len(s["impacting"]) == 1
    assert abs(s["impacting"][0][1][0] - 0.3) < 1e-8


def test_unknown_key_exit_code(tmp_path, capsys):
    sc = _write(tmp_path, {"model": {"kind": "finite", "h0": [[0]], "J": [[1]]},
                           "experiment": {"type": "spectrum-grid", "pointz": []}})
    assert main(["run", sc]) == 2
    err = capsys.readouterr().err
    assert "pointz" in err and "line" in err
    assert main(["validate", sc]) == 2


def test_model_construction_error_is_validation(tmp_path):
    sc = _write(tmp_path, {"model": {"kind": "embedded_block", "lambda0": 5, "v": 1},
                           "experiment": {"type": "impacting", "lambdas": [0.3]}})
    assert main(["validate", sc]) == 2
    assert main(["run", sc, "--out", str(tmp_path)]) == 2


def test_missing_file(tmp_path):
    assert main(["validate", str(tmp_path / "nope.json")]) == 2


def test_validate_ok(tmp_path, capsys):
    sc = _write(tmp_path, {"model": {"kind": "random_finite", "dim": 3}, "repeat": 2,
                           "experiment": {"type": "oracle-check"}})
    assert main(["validate", sc]) == 0
    assert "ok" in capsys.readouterr().out


def test_determinism_byte_identical_csv(tmp_path, monkeypatch):
    obj = {"model": {"kind": "random_finite", "dim": 4}, "seed": 17, "repeat": 2,
           "experiment": {"type": "spectrum-grid", "re": [-1, 1, 4], "im": [0.1, 1, 3]}}
    sc = _write(tmp_path, obj)
    assert main(["run", sc, "--out", str(tmp_path / "a")]) == 0
    monkeypatch.setenv("RESONANCE_LAB_THREADS", "3")
    assert main(["run", sc, "--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "trajectories.csv").read_bytes()
    b = (tmp_path / "b" / "trajectories.csv").read_bytes()
    assert a == b and len(a.splitlines()) > 1
    assert main(["run", sc, "--out", str(tmp_path / "c"), "--seed", "18"]) == 0
    assert (tmp_path / "c" / "trajectories.csv").read_bytes() != a


def test_egorov_report_round_trip(tmp_path):
    sc = _write(tmp_path, {"model": {"kind": "half_line_jacobi", "sites": [1], "J": [[1]]},
                           "experiment": {"type": "egorov", "interval": [-1.5, 1.5],
                                          "delta": 0.1, "grid_step": 0.01}})
    assert main(["run", sc, "--out", str(tmp_path), "--threads", "2"]) == 0
    report = json.load(open(tmp_path / "report.json"))
    cert = EgorovCertificate.from_dict(report["runs"][0]["result"])
    assert cert.check()
    assert "<polygon" in (tmp_path / "z_plane.svg").read_text()


def test_classify_and_oracle_runs(tmp_path):
    sc = _write(tmp_path, {"model": {"kind": "synthetic", "family": "sqrt"},
                           "experiment": {"type": "classify", "region": [0.2, 0.8, 0.2, 0.8]}},
                "c.json")
    assert main(["run", sc, "--out", str(tmp_path / "c")]) == 0
    rep = json.load(open(tmp_path / "c" / "report.json"))["runs"][0]["result"]["reports"]
    assert rep[0]["kind"] == "branch" and rep[0]["period"] == 2
    sc = _write(tmp_path, {"model": {"kind": "rank_one", "diag": [-1, 1],
                                     "phi": [0.7071067811865476, 0.7071067811865476],
                                     "scale": 1},
                           "experiment": {"type": "oracle-check", "lambdas": [1.2, 0.5]}},
                "o.json")
    assert main(["run", sc, "--out", str(tmp_path / "o")]) == 0
    res = json.load(open(tmp_path / "o" / "report.json"))["runs"][0]["result"]["lambdas"]
    assert res[0]["crossings"] == pytest.approx([0.44 / 1.2], abs=1e-9)
    assert res[1]["crossings"] == []


def test_continue_and_ray_stats(tmp_path):
    sc = _write(tmp_path, {"model": {"kind": "finite", "h0": [[0]], "J": [[1]]},
                           "experiment": {"type": "continue", "start": [0, 1],
                                          "path": [[0, 1.5], [0, 2]]}}, "k.json")
    assert main(["run", sc, "--out", str(tmp_path / "k")]) == 0
    rows = list(csv.DictReader(open(tmp_path / "k" / "trajectories.csv")))
    assert float(rows[-1]["im_r"]) == pytest.approx(2.0)
    sc = _write(tmp_path, {"model": {"kind": "rank_one", "diag": [0], "phi": [1], "scale": 1},
                           "experiment": {"type": "ray-stats", "z0": [0, 0.5],
                                          "region": [-1, 1, 0.1, 1], "n_rays": 12}}, "r.json")
    assert main(["run", sc, "--out", str(tmp_path / "r")]) == 0


def test_findings_exit_code(tmp_path):
    # an impossible continuation start is a numerical finding, not a validation error
    sc = _write(tmp_path, {"model": {"kind": "finite", "h0": [[0]], "J": [[1]]},
                           "experiment": {"type": "continue", "start": [0, 1], "start_r": 5,
                                          "path": [[0, 2]]}})
    assert main(["run", sc, "--out", str(tmp_path)]) == 1
    report = json.load(open(tmp_path / "report.json"))
    assert report["runs"][0]["errors"][0]["error"] == "InvalidInputError"


def test_selftest(capsys):
    assert main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") >= 6 and "FAIL" not in out
