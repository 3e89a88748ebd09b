import csv
import json
import subprocess
import sys

import pytest

from rsjd.cli import main

TOY = {
    "name": "toy", "dim_x": 1, "num_regimes": 2, "dim_w": 1, "has_equilibrium": True,
    "jump_rate": 0.5, "marks": {"type": "uniform", "low": -0.5, "high": 0.5},
    "drift": ["-x[1]", "-2*x[1] + sin(x[1])"],
    "diffusion": "x[1]/2",
    "jump_coeff": "gamma*x[1]",
    "rate_matrix": [[None, 1], [2, None]],
}


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def report(out):
    return json.loads((out / "report.json").read_text())


def test_simulate_single_path(tmp_path):
    out = tmp_path / "a"
    assert main(["simulate", "--example", "ex61", "--T", "1", "--dt", "1e-2", "--out", str(out)]) == 0
    rows = read_csv(out / "trajectory.csv")
    assert rows[0] == ["t", "x_1", "alpha", "event"]
    assert rows[1][:3] == ["0", "1", "1"]
    man = json.loads((out / "manifest.json").read_text())
    assert man["outputs"] == ["trajectory.csv"] and man["exit_code"] == 0 and man["seed"] == 0


def test_simulate_ensemble_rerun_identical(tmp_path):
    out = tmp_path / "b"
    args = ["simulate", "--example", "ex62", "--T", "2", "--dt", "1e-2", "--paths", "20", "--seed", "7", "--out", str(out)]
    assert main(args) == 0
    first = (out / "ensemble.csv").read_bytes()
    assert read_csv(out / "ensemble.csv")[0] == ["path_id", "t", "x_1", "alpha", "event"]
    assert main(["rerun", str(out / "manifest.json"), "--threads", "3", "--out", str(tmp_path / "c")]) == 0
    assert (tmp_path / "c" / "ensemble.csv").read_bytes() == first


def test_simulate_per_path(tmp_path):
    out = tmp_path / "p"
    assert main(["simulate", "--example", "ex61", "--T", "0.5", "--dt", "1e-2", "--paths", "3",
                 "--format", "per-path", "--out", str(out)]) == 0
    assert sorted(p.name for p in out.glob("path_*.csv")) == ["path_00000.csv", "path_00001.csv", "path_00002.csv"]


def test_config_model_and_bad_config(tmp_path, capsys):
    good = tmp_path / "toy.json"
    good.write_text(json.dumps(TOY))
    assert main(["simulate", "--model", str(good), "--T", "0.5", "--dt", "1e-2", "--out", str(tmp_path / "g")]) == 0
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({**TOY, "jump_rate": -1}))
    assert main(["simulate", "--model", str(bad), "--out", str(tmp_path / "x")]) == 2
    assert "jump_rate" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["simulate", "--example", "ex61", "--a0", "5"],
    ["simulate", "--example", "ex61", "--x0", "1,2"],
    ["simulate", "--example", "ex61", "--dt", "-1"],
    ["analyze", "--example", "ex61"],
])
def test_usage_errors(tmp_path, argv):
    assert main(argv + ["--out", str(tmp_path)]) == 2


def test_analyze_stationary_and_criterion(tmp_path):
    out = tmp_path / "r"
    assert main(["analyze", "--example", "ex62", "--stationary", "--criterion", "--out", str(out)]) == 0
    rep = report(out)
    assert rep["stationary"]["mu"] == pytest.approx([3 / 13, 8 / 13, 2 / 13], abs=1e-12)
    crit = rep["criterion"]
    assert crit["value"] == pytest.approx(79.5 / 13, abs=1e-10)
    assert crit["verdict"] == "inconclusive"
    assert any("79.5/13" in n for n in crit["notes"])
    assert crit["scalar_sharp_exponent"] == pytest.approx(-0.1145451, abs=1e-6)
    assert rep["verdicts"][0]["cites"] == "criterion.value"
    assert "wall_clock" not in json.dumps(rep)


def test_analyze_scan_and_diagnostics(tmp_path):
    spec = tmp_path / "scan.json"
    spec.write_text(json.dumps({"V": {"type": "power", "p": 2}, "k": 0.1, "n_radii": 8, "n_directions": 2}))
    out = tmp_path / "s"
    code = main(["analyze", "--example", "ex61", "--lyapunov-scan", str(spec), "--p1", "--radii", "0,5",
                 "--p2", "--dist-conv", "--checkpoints", "0.5,1", "--T", "1", "--dt", "1e-2", "--paths", "200",
                 "--out", str(out)])
    assert code == 0
    rep = report(out)
    assert set(rep) >= {"lyapunov_scan", "p1", "p2", "dist_conv"}
    assert rep["failures"] == []
    for name in ("p1.csv", "p2.csv", "dist_conv.csv"):
        assert (out / name).exists()
    assert rep["p1"]["sup"][0] == 1.0


def test_analyze_moment_writes_log(tmp_path):
    out = tmp_path / "m"
    assert main(["analyze", "--example", "ex61", "--moment-exponent", "2", "--as-exponent",
                 "--T", "1", "--dt", "1e-2", "--paths", "100", "--stride", "10", "--out", str(out)]) == 0
    rep = report(out)
    assert rep["moment_exponent"]["kind"] == "moment-resampled"
    assert rep["as_exponent"]["n_paths"] == 100
    assert len(read_csv(out / "moment_log.csv")) == 12


def test_analyze_all_diverged(tmp_path):
    model = tmp_path / "boom.json"
    model.write_text(json.dumps({"dim_x": 1, "num_regimes": 1, "dim_w": 1, "drift": "x[1]^3", "diffusion": "0",
                                 "rate_matrix": [[0]]}))
    code = main(["analyze", "--model", str(model), "--as-exponent", "--x0", "10", "--T", "5", "--dt", "0.1",
                 "--paths", "4", "--out", str(tmp_path / "d")])
    assert code == 3


def test_sensitivity(tmp_path):
    out = tmp_path / "z"
    assert main(["sensitivity", "--example", "ex61", "--T", "0.2", "--dt", "1e-2", "--paths", "50",
                 "--out", str(out)]) == 0
    rows = read_csv(out / "sensitivity.csv")
    assert rows[0] == ["delta", "mse", "stderr", "n_paths", "mean_varsigma_T"]
    assert [float(r[0]) for r in rows[1:]] == [1e-1, 1e-2, 1e-3]
    assert main(["sensitivity", "--example", "ex61", "--delta", "0", "--out", str(out)]) == 2


def test_sensitivity_needs_scalar_state(tmp_path):
    model = tmp_path / "vec.json"
    model.write_text(json.dumps({"dim_x": 2, "num_regimes": 1, "dim_w": 2, "drift": ["-x[1]", "-x[2]"],
                                 "diffusion": [["x[1]", "0"], ["0", "x[2]"]], "rate_matrix": [[0]]}))
    assert main(["sensitivity", "--model", str(model), "--x0", "1,1", "--out", str(tmp_path)]) == 2


def test_rerun_bad_manifest(tmp_path):
    m = tmp_path / "manifest.json"
    m.write_text(json.dumps({"schema": "other"}))
    assert main(["rerun", str(m)]) == 2


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "rsjd", "analyze", "--example", "ex61", "--stationary",
                          "--out", str(tmp_path)], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert report(tmp_path)["stationary"]["mu"] == pytest.approx([0.75, 0.25], abs=1e-12)
