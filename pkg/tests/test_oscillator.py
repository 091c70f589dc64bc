"""Staged construction of a geometry with persistently oscillating Q."""

import pytest

import plaplace as pl
from plaplace import oscillator


def test_thresholds_formula():
    t_low, t_high = pl.thresholds(3, 2.0, 5.0)
    C = pl.q_limit_constant(2.0, 5.0)
    assert t_low == pytest.approx(C * (2.0 / 3.0) ** 0.25)
    assert t_high == pytest.approx(C * (5.0 / 6.0) ** 0.25)
    assert t_low < t_high < C


def test_construct_validation():
    with pytest.raises(pl.InvalidParameter):
        pl.construct(3, 2.0, 5.0, 1.0, 3)   # odd
    with pytest.raises(pl.InvalidParameter):
        pl.construct(3, 2.0, 5.0, 1.0, 2)   # too few
    with pytest.raises(pl.ConvexityViolation):
        pl.construct(3, 2.0, 5.0, 1.0, 4, rate_scale=0.0)


def test_certificate_structure(oscillation):
    cert = oscillation.cert
    assert len(cert.stages) == 4
    for i, entry in enumerate(cert.stages):
        assert entry["index"] == i
        assert entry["kind"] == ("power-like" if i % 2 == 0 else "exponential")
        assert entry["u"] < 2.0 ** (-i)
    radii = [s["r"] for s in cert.stages]
    assert all(b >= a + 1.0 - 1e-9 for a, b in zip(radii, radii[1:]))
    # even stages dip below the lower threshold, odd climb above the upper
    for entry in cert.stages:
        if entry["index"] % 2 == 0:
            assert entry["Q"] < cert.t_low
        else:
            assert entry["Q"] > cert.t_high


def test_band_separation(oscillation):
    cert = oscillation.cert
    assert cert.band_min_even < cert.t_low < cert.t_high < cert.band_max_odd
    assert cert.separation >= (cert.t_high - cert.t_low) / 2.0


def test_verify_certificate(oscillation):
    out = pl.verify_certificate(oscillation.cert, oscillation.sol,
                                oscillation.prof)
    assert out["passed"]
    # psi(r_k) e^{-l r_k} increases along odd stages for l = 1 and 2
    for ell in (1, 2):
        seq = out["odd_growth_log"][ell]
        assert all(b > a for a, b in zip(seq, seq[1:]))


def test_tampered_certificate_detected(oscillation):
    bad = pl.OscillationCertificate.from_dict(oscillation.cert.to_dict())
    bad.stages[1]["r"] *= 1.1
    with pytest.raises(pl.Inconsistent):
        pl.verify_certificate(bad, oscillation.sol, oscillation.prof)

    bad2 = pl.OscillationCertificate.from_dict(oscillation.cert.to_dict())
    bad2.stages[2]["Q"] *= 1.05
    with pytest.raises(pl.Inconsistent):
        pl.verify_certificate(bad2, oscillation.sol, oscillation.prof)


def test_certificate_json_roundtrip(tmp_path, oscillation):
    import json
    path = oscillation.cert.to_json(tmp_path / "cert.json")
    with open(path) as fh:
        again = pl.OscillationCertificate.from_dict(json.load(fh))
    assert again.stages == oscillation.cert.stages
    assert again.separation == oscillation.cert.separation


def test_model_is_convex_and_continuous(oscillation):
    import numpy as np
    model = oscillation.model
    r = np.geomspace(0.01, oscillation.cert.stages[-1]["r"], 300)
    psi, dpsi, ddpsi = model.eval(r)
    finite = np.isfinite(psi)
    assert np.all(ddpsi[finite] >= -1e-9 * np.maximum(psi[finite], 1.0))
    assert np.all(dpsi[finite] >= 1.0 - 1e-9)


def test_stage_plan_triggers():
    plan = oscillator.StagePlan(2, 3, 2.0, 5.0)
    assert plan.kind == "power-like"
    assert plan.fires(5.0, plan.t_low - 0.01, 0.2, 3.0)
    assert not plan.fires(5.0, plan.t_low + 0.01, 0.2, 3.0)
    assert not plan.fires(5.0, plan.t_low - 0.01, 0.3, 3.0)

    plan = oscillator.StagePlan(3, 3, 2.0, 5.0)
    assert plan.kind == "exponential"
    assert plan.rate == 6.0
    assert plan.fires(5.0, plan.t_high + 0.01, 0.1, 16.0)
    assert not plan.fires(5.0, plan.t_high + 0.01, 0.1, 14.0)  # log psi < 3r
