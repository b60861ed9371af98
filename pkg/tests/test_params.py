import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sps_sim.params import (
    GHZ,
    REFERENCE_PARAMS,
    SystemParams,
    as_real,
    derive_rates,
    load_params,
    params_from_config,
    validate_regime,
)

from conftest import strong_params


def test_reference_rates():
    r = derive_rates(REFERENCE_PARAMS)
    assert r.K / GHZ == pytest.approx(1.92, rel=1e-12)
    assert r.Gamma / GHZ == pytest.approx(1.28, rel=1e-12)
    assert r.g.real / GHZ == pytest.approx(7.9744, abs=1e-4)
    assert r.epsilon == pytest.approx(0.006441, abs=1e-6)


def test_symmetric_decay_collapses_frequencies():
    p = SystemParams.from_ghz(8.0, 0.5, 0.5)
    r = derive_rates(p)
    assert r.Gamma == 0
    assert r.g == r.lam == p.g0
    assert r.epsilon == 0


@pytest.mark.parametrize("field,value", [("g0", 0.0), ("g0", -1.0), ("kappa", -1.0),
                                         ("gamma", -0.1), ("gamma_p", -2.0), ("delta", math.nan),
                                         ("kappa", math.inf)])
def test_invalid_params_rejected(field, value):
    kwargs = dict(g0=1.0, kappa=0.1, gamma=0.1)
    kwargs[field] = value
    with pytest.raises(ValueError):
        SystemParams(**kwargs)


def test_ghz_round_trip():
    p = SystemParams.from_ghz(8.0, 1.6, 0.32, 2.5, -1.6)
    assert p.delta == pytest.approx(-1.6 * p.g0)
    assert params_from_config(p.to_ghz()) == p


def test_config_keys(tmp_path):
    path = tmp_path / "p.json"
    path.write_text(json.dumps({"g0_ghz": 8.0, "kappa_ghz": 1.6, "gamma_ghz": 0.32}))
    assert load_params(path) == REFERENCE_PARAMS
    with pytest.raises(ValueError, match="unknown"):
        params_from_config({"g0_ghz": 8.0, "kappa_ghz": 1.6, "gamma_ghz": 0.32, "gama": 1})
    with pytest.raises(ValueError, match="missing"):
        params_from_config({"g0_ghz": 8.0})


def test_regime_reference_passes_with_dephasing():
    report = validate_regime(REFERENCE_PARAMS.with_(gamma_p=GHZ))
    assert report.passed
    assert {c.name for c in report.checks} == {"coupling", "decay_ratio", "dephasing_ratio"}
    assert report.as_dict()["passed"] is True


def test_regime_weak_coupling_fails():
    p = SystemParams(g0=1.0, kappa=1.0, gamma=0.1)
    assert "coupling" in validate_regime(p).failed()


def test_regime_zero_dephasing_always_passes():
    for thr in (2.0, 1e3, 1e9):
        check = {c.name: c for c in validate_regime(REFERENCE_PARAMS, thr).checks}["dephasing_ratio"]
        assert check.passed and check.ratio == math.inf


def test_regime_threshold_must_exceed_one():
    with pytest.raises(ValueError):
        validate_regime(REFERENCE_PARAMS, 1.0)


def test_as_real():
    assert as_real(3 + 0j) == 3.0
    with pytest.raises(ValueError):
        as_real(1 + 1e-6j)


def test_derive_rates_deterministic():
    assert derive_rates(REFERENCE_PARAMS) == derive_rates(REFERENCE_PARAMS)


def test_complex_lambda_outside_strong_coupling():
    r = derive_rates(SystemParams(g0=1.0, kappa=5.0, gamma=0.0))
    assert abs(r.lam.imag) > 0
    with pytest.raises(ValueError):
        as_real(r.g)


@given(strong_params(gamma_p=True))
def test_rate_identities(p):
    r = derive_rates(p)
    g0 = p.g0
    assert (r.g**2).real + (r.Gamma / 2) ** 2 == pytest.approx(g0**2, rel=1e-13)
    assert r.epsilon * (2 * r.g.real) ** 2 == pytest.approx(r.Gamma**2, rel=1e-12, abs=1e-12 * g0**2)
    assert r.K == p.kappa + p.gamma and r.Gamma == p.kappa - p.gamma
    assert r.g.real > 0 and r.epsilon >= 0


@given(strong_params())
def test_g1_equals_g2_without_dephasing(p):
    r = derive_rates(p)
    assert r.g1 == pytest.approx(r.g2, rel=1e-14)
    assert r.g1 == pytest.approx(r.g, rel=1e-14)


@given(st.floats(0.0, 3.0))
def test_lambda_matches_g_on_resonance(gamma_ghz):
    r = derive_rates(SystemParams.from_ghz(8.0, 1.6, gamma_ghz))
    assert r.lam == pytest.approx(r.g, rel=1e-14)
