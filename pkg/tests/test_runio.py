"""Run directories, manifests and exact CSV round-trips."""

import hashlib
import json
import os

import numpy as np
import pytest
from hypothesis import given, strategies as st

import plaplace as pl
from plaplace import runio

finite_floats = st.floats(allow_nan=False, allow_infinity=False)


@given(st.lists(st.tuples(finite_floats, finite_floats), min_size=1,
                max_size=50))
def test_csv_roundtrip_exact(tmp_path_factory, rows):
    path = tmp_path_factory.mktemp("csv") / "data.csv"
    a = np.array([r[0] for r in rows])
    b = np.array([r[1] for r in rows])
    pl.write_csv(path, ["a", "b"], [a, b])
    back = pl.read_csv(path)
    assert np.array_equal(back["a"], a)
    assert np.array_equal(back["b"], b)


def test_params_hash_deterministic():
    h1 = runio.params_hash("solve", {"n": 3, "p": 2.0})
    h2 = runio.params_hash("solve", {"p": 2.0, "n": 3})
    assert h1 == h2  # key order canonicalized
    assert h1 != runio.params_hash("solve", {"n": 3, "p": 2.5})
    assert h1 != runio.params_hash("classify", {"n": 3, "p": 2.0})


def test_rundir_success(tmp_path):
    with runio.RunDir("demo", {"x": 1}, root=tmp_path) as run:
        out = run.file("data.csv")
        pl.write_csv(out, ["v"], [[1.0, 2.0]])
        run.record(out)
    manifest = json.load(open(run.file("manifest.json")))
    assert manifest["status"] == "ok"
    assert manifest["error"] is None
    assert manifest["schema"] == runio.SCHEMA_VERSION
    assert manifest["deterministic"] is True
    # recorded hash matches an independent recomputation
    digest = hashlib.sha256(open(out, "rb").read()).hexdigest()
    assert manifest["outputs"]["data.csv"] == digest
    assert open(os.path.join(tmp_path, "latest")).read().strip() == run.name


def test_rundir_failure_still_writes_manifest(tmp_path):
    with pytest.raises(ValueError):
        with runio.RunDir("demo", {"x": 2}, root=tmp_path) as run:
            raise ValueError("boom")
    manifest = json.load(open(run.file("manifest.json")))
    assert manifest["status"] == "error"
    assert "boom" in manifest["error"]


def test_rundir_name_is_content_hash_prefix(tmp_path):
    with runio.RunDir("demo", {"x": 3}, root=tmp_path) as run:
        pass
    digest = runio.params_hash("demo", {"x": 3})
    assert run.name == f"demo-{digest[:12]}"


def test_default_output_root_env(monkeypatch, tmp_path):
    monkeypatch.setenv("PLAPLACE_RUNS", str(tmp_path / "elsewhere"))
    assert runio.default_output_root() == str(tmp_path / "elsewhere")
    monkeypatch.delenv("PLAPLACE_RUNS")
    assert "runs" in runio.default_output_root()
