import csv
import json
import math

import pytest

from graphctrl.cli import EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, dispatch

SQRT2 = math.sqrt(2.0)

STAR2 = {
    "graph": {
        "edges": [{"id": "e1", "length": 1.0, "from": "v1", "to": "c"},
                  {"id": "e2", "length": SQRT2, "from": "v2", "to": "c"}],
        "vertices": [{"id": "v1", "bc": "D"}, {"id": "v2", "bc": "D"}, {"id": "c", "bc": "NK"}],
    },
    "control": {"e1": [1.0, -2.0, 1.0]},
    "solver": {"num_modes": 40},
}


@pytest.fixture
def problem(tmp_path):
    p = tmp_path / "star2.json"
    p.write_text(json.dumps(STAR2))
    return p


def read(path):
    return path.read_bytes()


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_spectrum_command(problem, tmp_path):
    out = tmp_path / "out"
    assert dispatch(["--out-dir", str(out), "spectrum", "--problem", str(problem),
                     "--modes", "25"]) == EXIT_OK
    rows = read_rows(out / "spectrum.csv")
    assert len(rows) == 25
    lam1 = float(rows[0]["lambda"])
    assert abs(lam1 - (math.pi / (1 + SQRT2)) ** 2) < 1e-10
    manifest = json.loads((out / "manifest.json").read_text())
    assert set(manifest["outputs"]) == {"spectrum.csv", "spectrum_summary.json"}
    assert str(problem) in manifest["inputs"]


def test_outputs_byte_identical_across_runs(problem, tmp_path):
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    for out in (out1, out2):
        assert dispatch(["--out-dir", str(out), "spectrum", "--problem", str(problem),
                         "--modes", "30"]) == EXIT_OK
    assert read(out1 / "spectrum.csv") == read(out2 / "spectrum.csv")
    assert read(out1 / "spectrum_summary.json") == read(out2 / "spectrum_summary.json")


def test_check_assumptions_command(problem, tmp_path):
    out = tmp_path / "out"
    assert dispatch(["--out-dir", str(out), "check-assumptions", "--problem", str(problem),
                     "--modes", "40"]) == EXIT_OK
    doc = json.loads((out / "assumptions.json").read_text())
    assert "decay_fit" in doc and "vertex_compatibility" in doc
    assert doc["vertex_compatibility"]["vanishing_order"] >= 2


def test_lowerbounds_command(problem, tmp_path):
    out = tmp_path / "out"
    assert dispatch(["--out-dir", str(out), "lowerbounds", "--problem", str(problem),
                     "--modes", "50"]) == EXIT_OK
    doc = json.loads((out / "lowerbounds_summary.json").read_text())
    assert doc["dtilde_fit"] == pytest.approx(0.0, abs=0.05)
    rows = read_rows(out / "derivative_bound.csv")
    assert len(rows) == 50
    assert float(rows[0]["abs_Gprime"]) == pytest.approx(1 + SQRT2, rel=1e-6)


def test_moment_solve_command(tmp_path):
    freqs = tmp_path / "f.csv"
    with open(freqs, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "lambda"])
        for k in range(1, 7):
            w.writerow([k, (k * math.pi) ** 2])
    target = tmp_path / "x.csv"
    with open(target, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "re_x", "im_x"])
        for k in range(1, 7):
            w.writerow([k, 1.0 if k == 3 else 0.0, 0.0])
    out = tmp_path / "out"
    assert dispatch(["--out-dir", str(out), "moment-solve", "--freqs", str(freqs),
                     "--target", str(target), "--T", "1.0"]) == EXIT_OK
    diag = json.loads((out / "moment_diagnostics.json").read_text())
    assert diag["max_residual"] < 1e-8
    rows = read_rows(out / "control.csv")
    assert len(rows) == 1001


def test_simulate_command(problem, tmp_path):
    control = tmp_path / "u.json"
    control.write_text(json.dumps({"kind": "trig", "T": 0.5,
                                   "terms": [[3.0, "cos", 0.05]]}))
    out = tmp_path / "out"
    assert dispatch(["--out-dir", str(out), "simulate", "--problem", str(problem),
                     "--modes", "6", "--control", str(control)]) == EXIT_OK
    doc = json.loads((out / "simulate_summary.json").read_text())
    assert doc["norm_drift"] < 1e-10
    assert sum(doc["final_populations"]) == pytest.approx(1.0, abs=1e-10)


def test_liealg_command(problem, tmp_path):
    out = tmp_path / "out"
    assert dispatch(["--out-dir", str(out), "liealg", "--problem", str(problem),
                     "--modes", "4"]) == EXIT_OK
    doc = json.loads((out / "lie_closure.json").read_text())
    assert doc["target_dimension"] == 15
    assert doc["reached_dimension"] <= 15


def test_report_command(problem, tmp_path):
    out = tmp_path / "out"
    assert dispatch(["--out-dir", str(out), "report", "--problem", str(problem),
                     "--modes", "30", "--all"]) == EXIT_OK
    doc = json.loads((out / "report.json").read_text())
    assert doc["spectrum"]["simple"] is True
    assert "derivative_bound" in doc
    assert "transfer_demo" in doc


def test_unknown_command_usage_exit():
    assert dispatch(["frobnicate"]) == EXIT_USAGE
    assert dispatch([]) == EXIT_USAGE


def test_validation_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    doc = json.loads(json.dumps(STAR2))
    doc["graph"]["vertices"][2]["bc"] = "D"
    bad.write_text(json.dumps(doc))
    assert dispatch(["--out-dir", str(tmp_path / "o"), "spectrum",
                     "--problem", str(bad)]) == EXIT_VALIDATION


def test_numerical_exit_code(tmp_path):
    freqs = tmp_path / "f.csv"
    with open(freqs, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "lambda"])
        for k, lam in enumerate([0.0, 1e-4, 2e-4, 1.0], start=1):
            w.writerow([k, lam])
    target = tmp_path / "x.csv"
    with open(target, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "re_x", "im_x"])
        for k in range(1, 5):
            w.writerow([k, 0.0, 0.0])
    assert dispatch(["--out-dir", str(tmp_path / "o"), "moment-solve", "--freqs", str(freqs),
                     "--target", str(target), "--T", "2.0"]) == EXIT_NUMERICAL
