"""Extremal profiles, Rayleigh quotients and concentration sweeps."""

import math

import numpy as np
import pytest

import plaplace as pl
from plaplace import sobolev


def test_profile_validation():
    with pytest.raises(pl.InvalidParameter):
        pl.AubinTalenti(3, 3.0)       # p = n
    with pytest.raises(pl.InvalidParameter):
        pl.AubinTalenti(3, 2.0, b=-1.0)


def test_extremal_solves_equation():
    out = pl.euclidean_residual(pl.AubinTalenti(3, 2.0))
    assert out["max_rel_residual"] < 1e-8
    # n=4, p=2, a=2 sqrt(2), b=1 is the unit-coefficient solution
    out = pl.euclidean_residual(pl.AubinTalenti(4, 2.0, a=2.0 * math.sqrt(2.0)))
    assert out["c"] == pytest.approx(1.0, rel=1e-12)
    assert out["max_rel_residual"] < 1e-8


def test_residual_scaling_homogeneity():
    """Doubling the amplitude scales c by 2^{-(p*-2)} (here 1/4 for n=4)."""
    c1 = pl.euclidean_residual(pl.AubinTalenti(4, 2.0, a=1.0))["c"]
    c2 = pl.euclidean_residual(pl.AubinTalenti(4, 2.0, a=2.0))["c"]
    assert c2 / c1 == pytest.approx(0.25, rel=1e-12)


def test_euclidean_b_invariance():
    eu = pl.make_model("euclidean")
    vals = []
    for b in (1.0, 0.3, 0.01):
        prof = pl.AubinTalenti(3, 2.0, b=b)
        R = pl.truncation_radius(eu, 3, 2.0, b)
        vals.append(pl.sobolev_quotient(prof.u, prof.du, eu, 3, 2.0, R)["quotient"])
    spread = (max(vals) - min(vals)) / min(vals)
    assert spread < 1e-6


def test_reference_cached_and_positive():
    ref1 = pl.euclidean_reference(3, 2.0)
    ref2 = pl.euclidean_reference(3, 2.0)
    assert ref1 is ref2
    assert ref1["quotient"] > 0.0
    assert ref1["err"] < 1e-5 * ref1["quotient"]


def test_hyperbolic_sweep_above_reference():
    hy = pl.make_model("hyperbolic")
    sweep = pl.concentration_sweep(hy, 3, 2.0, [1.0, 0.1, 0.01])
    gaps = [row["gap"] for row in sweep["rows"]]
    assert all(g > 0.0 for g in gaps)
    assert gaps[0] > gaps[1] > gaps[2]
    assert not any(row["flagged"] for row in sweep["rows"])


def test_powerlike_sweep_above_reference():
    pk = pl.make_model("powerlike:k=2")
    sweep = pl.concentration_sweep(pk, 3, 2.0, [1.0, 0.1, 0.01])
    gaps = [row["gap"] for row in sweep["rows"]]
    assert all(g > 0.0 for g in gaps)
    assert gaps[0] > gaps[1] > gaps[2]


def test_euclidean_sweep_equals_reference():
    eu = pl.make_model("euclidean")
    sweep = pl.concentration_sweep(eu, 3, 2.0, [1.0, 0.1])
    for row in sweep["rows"]:
        assert abs(row["gap"]) < 1e-9 * sweep["reference"]["quotient"]


def test_sweep_requires_decreasing_b():
    hy = pl.make_model("hyperbolic")
    with pytest.raises(pl.InvalidParameter):
        pl.concentration_sweep(hy, 3, 2.0, [0.1, 1.0])


def test_truncation_radius_capped():
    hy = pl.make_model("hyperbolic")
    horizon = pl.safe_horizon(hy, 3)
    assert pl.truncation_radius(hy, 3, 2.0, 1e10) == pytest.approx(horizon)
    assert pl.truncation_radius(hy, 3, 2.0, 1.0) == pytest.approx(20.0)


def test_tail_divergence_on_overflowing_cutoff():
    hy = pl.make_model("hyperbolic")
    prof = pl.AubinTalenti(3, 2.0)
    with pytest.raises(pl.TailDivergence):
        pl.sobolev_quotient(prof.u, prof.du, hy, 3, 2.0, 500.0)


def test_outer_mass_reported():
    eu = pl.make_model("euclidean")
    prof = pl.AubinTalenti(3, 2.0, b=0.01)
    R = pl.truncation_radius(eu, 3, 2.0, 0.01)
    out = pl.sobolev_quotient(prof.u, prof.du, eu, 3, 2.0, R)
    assert 0.0 <= out["outer_mass_fraction"] < 0.5


def test_export_sweep_csv(tmp_path):
    eu = pl.make_model("euclidean")
    sweep = pl.concentration_sweep(eu, 3, 2.0, [1.0, 0.1])
    path = sobolev.export_sweep_csv(sweep, tmp_path / "sweep.csv")
    lines = open(path).read().splitlines()
    assert lines[0] == "model,n,p,b,quotient,err"
    assert len(lines) == 3
    for line, row in zip(lines[1:], sweep["rows"]):
        fields = line.split(",")
        assert fields[0] == '"euclidean"'
        assert float(fields[3]) == row["b"]
        assert float(fields[4]) == row["quotient"]
