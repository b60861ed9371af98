import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sps_sim.coherent import (
    EXCITED,
    AmplitudePair,
    amplitudes,
    check_time_grid,
    emission_probability,
    probabilities,
    propagator,
    quantum_efficiency,
)
from sps_sim.oracle import integrate_coherent_ode
from sps_sim.params import GHZ, REFERENCE_PARAMS, SystemParams, derive_rates

from conftest import strong_params, sup

DETUNINGS = (0.0, 0.8, -0.8, 1.6, -1.6, 2.4, -2.4)


def test_propagator_identity_at_zero(ref):
    assert np.array_equal(propagator(ref, 0.0), np.eye(2))


def test_propagator_rejects_negative_time(ref):
    with pytest.raises(ValueError):
        propagator(ref, -1e-12)


def test_strong_coupling_form_close_on_resonance(ref, K):
    t = np.linspace(0, 5 / K, 501)
    assert sup(propagator(ref, t), propagator(ref, t, strong_coupling=True)) <= 1e-3


def test_off_diagonals_equal_on_resonance(ref, K):
    u = propagator(ref, np.linspace(0, 5 / K, 101))
    assert np.array_equal(u[:, 0, 1], u[:, 1, 0])


def test_initial_amplitudes(ref):
    a = amplitudes(ref, 0.0)
    assert a.e == 1 and a.c == 0


def test_cavity_amplitude_vanishes_at_half_period(ref):
    g = derive_rates(ref).g.real
    assert abs(amplitudes(ref, math.pi / g).c) < 1e-15


def test_non_normalizable_init_rejected(ref):
    with pytest.raises(ValueError):
        amplitudes(ref, 1e-10, AmplitudePair(1.0, 0.5))


def test_amplitudes_match_ode_at_50ps(ref):
    a = amplitudes(ref, np.array([0.0, 0.05e-9]))
    b = integrate_coherent_ode(ref, np.array([0.0, 0.05e-9]))
    assert max(sup(a.e, b.e), sup(a.c, b.c)) <= 1e-8


@pytest.mark.parametrize("d", DETUNINGS)
def test_amplitudes_match_ode(ref, K, d):
    p = ref.with_(delta=d * ref.g0)
    t = np.linspace(0, 10 / K, 1501)
    a, b = amplitudes(p, t), integrate_coherent_ode(p, t)
    assert max(sup(a.e, b.e), sup(a.c, b.c)) <= 1e-8


def test_general_initial_state_matches_ode(ref, K):
    init = AmplitudePair(0.6, 0.8j)
    p = ref.with_(delta=0.8 * ref.g0)
    t = np.linspace(0, 5 / K, 301)
    a, b = amplitudes(p, t, init), integrate_coherent_ode(p, t, init)
    assert max(sup(a.e, b.e), sup(a.c, b.c)) <= 1e-8


def test_initial_probabilities(ref):
    tr = probabilities(ref, np.array([0.0, 1e-12]))
    assert (tr.p_e[0], tr.p_c[0], tr.p_out[0], tr.p_side[0]) == (1.0, 0.0, 0.0, 0.0)


@pytest.mark.parametrize("bad", [[], [0.1, 0.2], [0.0, 0.2, 0.1], [[0.0, 1.0]]])
def test_bad_time_grids(bad):
    with pytest.raises(ValueError):
        check_time_grid(bad)


def test_rabi_oscillation_at_2g(ref, K):
    t = np.linspace(0, 2 / K, 40001)
    pc = probabilities(ref, t).p_c
    peaks = np.flatnonzero((pc[1:-1] > pc[:-2]) & (pc[1:-1] >= pc[2:])) + 1
    freq = 2 * math.pi / np.mean(np.diff(t[peaks]))
    assert freq == pytest.approx(2 * derive_rates(ref).g.real, rel=1e-3)


def _extrema(ref, K):
    t = np.linspace(0, 5 / K, 50001)
    tr = probabilities(ref, t)
    pc_max = np.flatnonzero((tr.p_c[1:-1] > tr.p_c[:-2]) & (tr.p_c[1:-1] >= tr.p_c[2:])) + 1
    pe_min = np.flatnonzero((tr.p_e[1:-1] < tr.p_e[:-2]) & (tr.p_e[1:-1] <= tr.p_e[2:])) + 1
    n = min(pc_max.size, pe_min.size)
    assert n > 3
    return t, pc_max[:n], pe_min[:n]


def test_antiphase_populations_offset(ref, K):
    # p_c peaks at tan(gt) = 2g/K, p_e vanishes at cot(gt) = -Gamma/2g
    t, pc_max, pe_min = _extrema(ref, K)
    r = derive_rates(ref)
    g = r.g.real
    offset = (math.atan(K / (2 * g)) + math.atan(r.Gamma / (2 * g))) / g
    step = t[1] - t[0]
    assert np.all(np.abs((t[pe_min] - t[pc_max]) - offset) <= step)
    # still anti-phase: the offset is a small fraction of the half period
    assert offset < 0.1 * math.pi / g


@pytest.mark.xfail(strict=True, reason="extrema are offset by a fixed phase of about 0.2 rad, not one grid step")
def test_antiphase_within_one_grid_step(ref, K):
    _, pc_max, pe_min = _extrema(ref, K)
    assert np.all(np.abs(pc_max - pe_min) <= 1)


def test_qe_reference_value(ref):
    assert quantum_efficiency(ref) == pytest.approx(0.82672, abs=5e-6)
    g0, k, gm = ref.g0, ref.kappa, ref.gamma
    assert quantum_efficiency(ref) == pytest.approx(g0**2 / (g0**2 + k * gm) * k / (k + gm), rel=1e-13)


def test_qe_limits():
    assert quantum_efficiency(SystemParams.from_ghz(8.0, 1.6, 0.0)) == pytest.approx(1.0, rel=1e-14)
    assert quantum_efficiency(SystemParams.from_ghz(1e-6, 1.6, 0.32)) < 1e-10
    with pytest.raises(ValueError):
        quantum_efficiency(SystemParams(g0=1.0, kappa=0.0, gamma=0.0))


def test_p_out_limit_is_qe(ref, K):
    t = np.array([0.0, 20 / K])
    assert emission_probability(ref, t)[-1] == pytest.approx(quantum_efficiency(ref), abs=1e-5)


@pytest.mark.parametrize("d", DETUNINGS)
def test_p_out_limit_is_qe_detuned(ref, K, d):
    # the slower normal mode decays at only ~K/4 at |delta| = 2.4 g0, so wait longer
    p = ref.with_(delta=d * ref.g0)
    t = np.array([0.0, 40 / K])
    assert emission_probability(p, t)[-1] == pytest.approx(quantum_efficiency(p), abs=1e-5)


def test_detuned_qe_strong_coupling_option(ref):
    p = ref.with_(delta=1.6 * ref.g0)
    exact, approx = quantum_efficiency(p), quantum_efficiency(p, strong_coupling=True)
    assert 0 < approx < exact < 1
    assert quantum_efficiency(ref, True) == pytest.approx(quantum_efficiency(ref), rel=1e-14)


def test_critical_lambda_zero_branch():
    # g0 = Gamma/2 puts lambda exactly at zero
    p = SystemParams(g0=1.0, kappa=2.0, gamma=0.0)
    assert derive_rates(p).lam == 0
    t = np.linspace(0, 40, 40001)
    tr = probabilities(p, t)
    assert np.abs(tr.total() - 1).max() < 1e-6
    assert tr.p_out[-1] == pytest.approx(quantum_efficiency(p), abs=1e-6)


@pytest.mark.parametrize("d", DETUNINGS)
def test_conservation_reference(ref, K, d):
    p = ref.with_(delta=d * ref.g0)
    g = abs(derive_rates(p).g)
    t = np.linspace(0, 20 / K, int(20 / K / (0.01 / g)) + 2)
    assert np.abs(probabilities(p, t).total() - 1).max() <= 1e-6


@given(strong_params(delta=True))
def test_conservation_property(p):
    K = p.kappa + p.gamma
    g = abs(derive_rates(p).g)
    t = np.linspace(0, 8 / K, int(8 / K / (0.01 / g)) + 2)
    tr = probabilities(p, t)
    assert np.abs(tr.total() - 1).max() <= 1e-6
    assert np.all(np.diff(tr.p_out) >= -1e-15) and np.all(np.diff(tr.p_side) >= -1e-15)
    for arr in (tr.p_e, tr.p_c, tr.p_out, tr.p_side):
        assert arr.min() >= -1e-10 and arr.max() <= 1 + 1e-10


@given(strong_params(delta=True), st.floats(0.0, 1.0), st.floats(0.0, 2 * math.pi))
def test_norm_never_grows(p, mix, phase):
    init = AmplitudePair(math.sqrt(1 - mix**2), mix * np.exp(1j * phase))
    t = np.linspace(0, 3 / (p.kappa + p.gamma), 200)
    norm = amplitudes(p, t, init).norm_sq()
    assert norm.max() <= 1 + 1e-10
    assert np.all(np.diff(norm) <= 1e-12)


@given(strong_params(), st.floats(0.0, 2e-10), st.floats(0.0, 2e-10))
def test_propagator_semigroup_on_resonance(p, t1, t2):
    lhs = propagator(p, t1 + t2)
    rhs = propagator(p, t1) @ propagator(p, t2)
    assert sup(lhs, rhs) <= 1e-12
