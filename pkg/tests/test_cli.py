"""End-to-end command-line runs (in-process via cli.main)."""

import json
import math
import os

import numpy as np
import pytest

import plaplace as pl
from plaplace import cli


def run_cli(tmp_path, *args):
    return cli.main(["--out", str(tmp_path)] + list(args))


def latest_dir(tmp_path):
    name = open(os.path.join(tmp_path, "latest")).read().strip()
    return os.path.join(tmp_path, name)


def test_solve_smoke(tmp_path):
    code = run_cli(tmp_path, "solve", "--model", "hyperbolic", "--n", "3",
                   "--p", "2", "--q", "5", "--alpha", "1", "--rmax", "60")
    assert code == 0
    d = latest_dir(tmp_path)
    assert os.path.exists(os.path.join(d, "solution.csv"))
    manifest = json.load(open(os.path.join(d, "manifest.json")))
    assert manifest["status"] == "ok"
    assert set(manifest["outputs"]) == {"solution.csv", "solution.json"}


def test_solve_matches_oracle(tmp_path):
    alpha = 2.0 * math.sqrt(2.0)
    code = run_cli(tmp_path, "solve", "--model", "euclidean", "--n", "4",
                   "--p", "2", "--q", "3", "--alpha", repr(alpha),
                   "--rmax", "20")
    assert code == 0
    data = pl.read_csv(os.path.join(latest_dir(tmp_path), "solution.csv"))
    u1 = float(np.interp(1.0, data["r"], data["u"]))
    assert abs(u1 - alpha / 2.0) < 1e-6 * alpha


def test_missing_argument_exits_2(tmp_path):
    with pytest.raises(SystemExit) as exc:
        run_cli(tmp_path, "solve", "--model", "euclidean", "--n", "4",
                "--p", "2", "--q", "3")
    assert exc.value.code == 2


def test_bad_model_exits_2(tmp_path):
    code = run_cli(tmp_path, "solve", "--model", "nosuch", "--n", "3",
                   "--p", "2", "--q", "5", "--alpha", "1")
    assert code == 2


def test_subcritical_q_exits_2(tmp_path):
    code = run_cli(tmp_path, "solve", "--model", "euclidean", "--n", "3",
                   "--p", "2", "--q", "4", "--alpha", "1")
    assert code == 2


def test_classify_verdicts(tmp_path):
    assert run_cli(tmp_path, "classify", "--model", "euclidean",
                   "--n", "3", "--p", "2") == 0
    verdict = json.load(open(os.path.join(latest_dir(tmp_path),
                                          "verdict.json")))
    assert verdict["verdict"] == "pSC"
    assert verdict["regime"]["name"] == "power-like"
    assert verdict["regime"]["hp_fail"] is True

    assert run_cli(tmp_path, "classify", "--model", "exppower:c=1,m=3",
                   "--n", "3", "--p", "2") == 0
    verdict = json.load(open(os.path.join(latest_dir(tmp_path),
                                          "verdict.json")))
    assert verdict["verdict"] == "pSI"

    assert run_cli(tmp_path, "classify", "--model", "hyperbolic",
                   "--n", "3", "--p", "2") == 0
    verdict = json.load(open(os.path.join(latest_dir(tmp_path),
                                          "verdict.json")))
    assert verdict["verdict"] == "pSC"
    assert verdict["regime"]["name"] == "hp-add-1"
    assert abs(verdict["regime"]["ell"] - 1.0) < 1e-2


def test_diagnose_checks(tmp_path):
    code = run_cli(tmp_path, "diagnose", "--model", "hyperbolic", "--n", "3",
                   "--p", "2", "--q", "5", "--alpha", "1", "--rmax", "30",
                   "--checks", "pohozaev,ratio-sc,envelope")
    assert code == 0
    d = latest_dir(tmp_path)
    report = json.load(open(os.path.join(d, "report.json")))
    assert all(v["passed"] for v in report["verdicts"])
    assert report["ratio-sc"]["rel_deviation"] < 0.05
    assert report["envelope"]["violations"] == 0
    assert os.path.exists(os.path.join(d, "traces.csv"))


def test_diagnose_regime_mismatch_exits_4(tmp_path):
    code = run_cli(tmp_path, "diagnose", "--model", "exppower:c=1,m=3",
                   "--n", "3", "--p", "2", "--q", "5", "--alpha", "1",
                   "--checks", "ratio-sc")
    assert code == 4
    manifest = json.load(open(os.path.join(latest_dir(tmp_path),
                                           "manifest.json")))
    assert manifest["status"] == "error"
    assert "RegimeMismatch" in manifest["error"]


def test_diagnose_unknown_check_exits_2(tmp_path):
    code = run_cli(tmp_path, "diagnose", "--model", "euclidean", "--n", "3",
                   "--p", "2", "--q", "5", "--alpha", "1",
                   "--checks", "nosuchcheck")
    assert code == 2


def test_quotient_rows_above_reference(tmp_path):
    code = run_cli(tmp_path, "quotient", "--model", "hyperbolic", "--n", "3",
                   "--p", "2", "--b", "1,0.1,0.01")
    assert code == 0
    sweep = json.load(open(os.path.join(latest_dir(tmp_path), "sweep.json")))
    ref = sweep["reference"]["quotient"]
    assert len(sweep["rows"]) == 3
    assert all(row["quotient"] > ref for row in sweep["rows"])


def test_oscillate_bad_stage_count_exits_2(tmp_path):
    code = run_cli(tmp_path, "oscillate", "--n", "3", "--p", "2", "--q", "5",
                   "--alpha", "1", "--stages", "3")
    assert code == 2
    manifest = json.load(open(os.path.join(latest_dir(tmp_path),
                                           "manifest.json")))
    assert manifest["status"] == "error"


def test_sweep_cartesian_product(tmp_path):
    code = run_cli(tmp_path, "sweep", "--model", "hyperbolic", "--n", "3",
                   "--p", "2", "--alpha", "0.5,1", "--q", "5,7",
                   "--rmax", "20")
    assert code == 0
    d = latest_dir(tmp_path)
    listing = json.load(open(os.path.join(d, "runs.json")))
    assert len(listing["runs"]) == 4
    assert listing["points"] == [
        {"alpha": 0.5, "q": 5.0}, {"alpha": 0.5, "q": 7.0},
        {"alpha": 1.0, "q": 5.0}, {"alpha": 1.0, "q": 7.0},
    ]
    for name in listing["runs"]:
        manifest = json.load(open(os.path.join(tmp_path, name,
                                               "manifest.json")))
        assert manifest["status"] == "ok"


def test_solve_rerun_is_byte_identical(tmp_path):
    args = ("solve", "--model", "euclidean", "--n", "3", "--p", "2",
            "--q", "5", "--alpha", "1", "--rmax", "10")
    assert run_cli(tmp_path, *args) == 0
    d = latest_dir(tmp_path)
    m1 = json.load(open(os.path.join(d, "manifest.json")))
    assert run_cli(tmp_path, *args) == 0
    m2 = json.load(open(os.path.join(d, "manifest.json")))
    assert m1["outputs"] == m2["outputs"]


def test_output_root_env_var(tmp_path, monkeypatch):
    monkeypatch.setenv("PLAPLACE_RUNS", str(tmp_path / "viaenv"))
    code = cli.main(["classify", "--model", "euclidean", "--n", "3",
                     "--p", "2"])
    assert code == 0
    assert os.path.exists(tmp_path / "viaenv" / "latest")
