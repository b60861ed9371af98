"""Closed form versus oracle comparisons, grouped into suites.

Each check measures one number and compares it with a tolerance. A report
passes only if every check does.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import linear_sum_assignment

from . import oracle
from .coherent import amplitudes, probabilities, propagator, quantum_efficiency
from .dephasing import (
    dephased_probabilities,
    emission_probability_dephased,
    mean_amplitudes_dephased,
    modulation_depth,
    moments_closed_form,
    qe_dephased,
    secular_problem,
    secular_roots_approx,
)
from .figures import DEPHASING_RATES_GHZ, FIG3_DETUNINGS
from .params import GHZ, REFERENCE_PARAMS, SystemParams, derive_rates
from .spectra import (
    coherent_spectrum,
    correlation_kernel,
    default_grid,
    dephased_spectrum,
    emission_spectrum,
    integration_grid,
    normal_mode_splittings,
    normalize_spectrum,
    peak_separation,
    peak_widths,
)

SUITES = ("all", "coherent", "dephasing", "spectra", "roots")
BUDGETS = {
    "quick": {"n_traj": 1000, "kernel_points": 1201, "time_points": 2001},
    "full": {"n_traj": 10000, "kernel_points": 2001, "time_points": 4001},
}


@dataclass
class Check:
    name: str
    value: float
    tolerance: float | list
    passed: bool
    seconds: float = 0.0

    def as_dict(self) -> dict:
        d = asdict(self)
        d["value"] = float(d["value"])
        d["passed"] = bool(d["passed"])
        return d


def at_most(name, value, tol) -> Check:
    return Check(name, float(value), tol, bool(value <= tol))


def within(name, value, lo, hi) -> Check:
    return Check(name, float(value), [lo, hi], bool(lo <= value <= hi))


def flag(name, ok: bool) -> Check:
    return Check(name, float(ok), 1.0, bool(ok))


def _K(p):
    return p.kappa + p.gamma


# -- measurements shared with the acceptance tests -------------------------

def qe_quadrature_error(p: SystemParams = REFERENCE_PARAMS) -> float:
    t = np.linspace(0, 20 / _K(p), 20001)
    c = amplitudes(p, t).c
    return abs(quantum_efficiency(p) - 2 * p.kappa * trapezoid(np.abs(c) ** 2, t))


def ode_error(p: SystemParams, points: int = 2001) -> float:
    t = np.linspace(0, 10 / _K(p), points)
    a = amplitudes(p, t)
    b = oracle.integrate_coherent_ode(p, t)
    return float(max(np.abs(a.e - b.e).max(), np.abs(a.c - b.c).max()))


def conservation_error(p: SystemParams = REFERENCE_PARAMS) -> float:
    g = abs(derive_rates(p).g)
    t_max = 20 / _K(p)
    n = int(math.ceil(t_max / (0.01 / g))) + 1
    return float(np.abs(probabilities(p, np.linspace(0, t_max, n)).total() - 1).max())


def dephased_conservation_error(p: SystemParams, points: int = 4001) -> float:
    tr = oracle.exact_dephased_probabilities(p, np.linspace(0, 20 / _K(p), points))
    return float(np.abs(tr.total() - 1).max())


def closed_form_deviation(p: SystemParams, points: int = 501) -> float:
    """Sup-norm over [0, 5/K] of closed-form minus exact physical moments."""
    t = np.linspace(0, 5 / _K(p), points)
    a = moments_closed_form(p, t).physical(p)
    b = oracle.exact_moments(p, t).physical(p)
    return float(max(np.abs(x - y).max() for x, y in zip(a, b)))


def monte_carlo_zscores(p: SystemParams, n_traj: int, seed: int, samples: int = 20) -> np.ndarray:
    """|z| of Monte Carlo |E|^2, |C|^2, Re/Im E C* against the exact system at ``samples`` times."""
    t = np.linspace(0, 5 / _K(p), samples + 1)
    mc = oracle.monte_carlo_moments(p, t, n_traj, seed)
    pc, pe, h = oracle.exact_moments(p, t).physical(p)
    # t = 0 is deterministic (zero spread), so it is left out
    pairs = [
        (mc.mean["abs2_E"], pe, mc.stderr["abs2_E"]),
        (mc.mean["abs2_C"], pc, mc.stderr["abs2_C"]),
        (mc.mean["H"].real, h.real, mc.stderr["re_H"]),
        (mc.mean["H"].imag, h.imag, mc.stderr["im_H"]),
    ]
    return np.abs(np.array([(m[1:] - e[1:]) / s[1:] for m, e, s in pairs]))


def root_errors(p: SystemParams, label: str) -> tuple[np.ndarray, np.ndarray]:
    """Distances of approximate to matched exact roots: (first-kind, oscillatory)."""
    approx = np.array(secular_roots_approx(p, label))
    exact = oracle.secular_roots_exact(secular_problem(p, label))
    cost = np.abs(approx[:, None] - exact[None, :])
    rows, cols = linear_sum_assignment(cost)
    d = cost[rows, cols][np.argsort(rows)]
    return d[:2], d[2:]


def root_tolerances(p: SystemParams) -> tuple[float, float]:
    g = derive_rates(p).g.real
    x = p.gamma_p / g
    return 2 * g * x**3, 2 * g * x**2


def splitting_errors(p: SystemParams = REFERENCE_PARAMS, points: int = 4001):
    closed = normal_mode_splittings(p)
    out = {}
    for channel, key in (("forward", "delta_omega_f"), ("side", "delta_omega_s")):
        grid = default_grid(p, channel, points)
        sep = peak_separation(coherent_spectrum(p, grid, channel))
        out[channel] = (abs(sep - closed[key]), grid.step)
    return out


def parseval_errors(p: SystemParams = REFERENCE_PARAMS) -> dict:
    eta = quantum_efficiency(p)
    fwd = coherent_spectrum(p, integration_grid(p, "forward"), "forward").integral()
    side = coherent_spectrum(p, integration_grid(p, "side"), "side").integral()
    return {"forward": abs(fwd - eta), "side": abs(side - (1 - eta))}


def spectral_trends(p: SystemParams = REFERENCE_PARAMS, rates=DEPHASING_RATES_GHZ) -> dict:
    """Per channel, lists of (heights, fwhms) for each dephasing rate."""
    out = {}
    for channel in ("side", "forward"):
        rows = []
        for r in rates:
            pg = p.with_(gamma_p=r * GHZ)
            s = normalize_spectrum(emission_spectrum(pg, default_grid(pg, channel), channel), pg)
            w = peak_widths(s)
            rows.append(([x["height"] for x in w], [x["fwhm"] for x in w]))
        out[channel] = rows
    return out


def strictly_monotone(rows) -> bool:
    heights = np.array([r[0] for r in rows])
    widths = np.array([r[1] for r in rows])
    return bool(np.all(np.diff(heights, axis=0) < 0) and np.all(np.diff(widths, axis=0) > 0))


def dephased_limit_error(p: SystemParams, gamma_p_over_g: float) -> float:
    """Largest relative pointwise gap between dephased and coherent spectra."""
    pg = p.with_(gamma_p=gamma_p_over_g * derive_rates(p).g.real)
    worst = 0.0
    for channel in ("side", "forward"):
        grid = default_grid(p, channel)
        a = dephased_spectrum(pg, grid, channel).values
        b = coherent_spectrum(p, grid, channel).values
        worst = max(worst, float(np.abs(a - b).max() / b.max()))
    return worst


def kernel_spectrum_error(p: SystemParams, channel: str = "forward", points: int = 2001) -> float:
    grid_t = np.linspace(0, 20 / _K(p), points)
    kernel = correlation_kernel(p, grid_t, grid_t)
    rate = 2 * p.kappa if channel == "forward" else 2 * p.gamma
    grid = default_grid(p, channel)
    s = oracle.spectrum_from_kernel(kernel, rate, grid, channel)
    numeric = s.values / oracle.kernel_channel_probability(kernel, rate, channel)
    closed = normalize_spectrum(dephased_spectrum(p, grid, channel), p).values
    return float(np.abs(numeric - closed).max() / closed.max())


# -- suites -------------------------------------------------------------------

def coherent_checks(budget: dict, seed: int) -> list[Check]:
    p = REFERENCE_PARAMS
    K = _K(p)
    checks = [at_most("coherent.qe_quadrature", qe_quadrature_error(p), 1e-5)]
    worst = max(ode_error(p.with_(delta=d * p.g0)) for d in FIG3_DETUNINGS)
    checks.append(at_most("coherent.ode_equivalence_fig3_detunings", worst, 1e-8))
    checks.append(at_most("coherent.conservation", conservation_error(p), 1e-6))
    t20 = np.array([0.0, 20 / K])
    checks.append(at_most("coherent.p_out_limit",
                          abs(probabilities(p, t20).p_out[-1] - quantum_efficiency(p)), 1e-5))
    checks.append(at_most("coherent.propagator_identity",
                          np.abs(propagator(p, 0.0) - np.eye(2)).max(), 1e-15))
    t = np.linspace(0, 5 / K, 1001)
    checks.append(at_most("coherent.strong_vs_exact_resonant",
                          np.abs(propagator(p, t) - propagator(p, t, strong_coupling=True)).max(), 1e-3))
    # oscillation frequency of p_c from its peak spacing over [0, 2/K]
    t = np.linspace(0, 2 / K, 40001)
    pc = probabilities(p, t).p_c
    peaks = np.flatnonzero((pc[1:-1] > pc[:-2]) & (pc[1:-1] >= pc[2:])) + 1
    freq = 2 * math.pi / np.mean(np.diff(t[peaks]))
    g = derive_rates(p).g.real
    checks.append(at_most("coherent.rabi_frequency_2g", abs(freq / (2 * g) - 1), 1e-3))
    return checks


def dephasing_checks(budget: dict, seed: int) -> list[Check]:
    p = REFERENCE_PARAMS
    K = _K(p)
    p1, p25, p4 = (p.with_(gamma_p=r * GHZ) for r in (1.0, 2.5, 4.0))
    t = np.linspace(0, 5 / K, budget["time_points"])
    a = dephased_probabilities(p, t)
    b = probabilities(p, t)
    red = max(np.abs(getattr(a, k) - getattr(b, k)).max() for k in ("p_e", "p_c", "p_out", "p_side"))
    checks = [at_most("dephasing.reduction_gamma_p_zero", red, 1e-10)]
    e1, e25 = closed_form_deviation(p1), closed_form_deviation(p25)
    checks.append(at_most("dephasing.closed_form_vs_exact_2.5GHz", e25, 0.05))
    checks.append(within("dephasing.error_scaling_ratio", e25 / e1, 6.25 / 2, 6.25 * 2))
    checks.append(at_most("dephasing.exact_conservation_1GHz", dephased_conservation_error(p1), 1e-4))
    checks.append(at_most("dephasing.p_out_vs_qe_20K",
                          abs(emission_probability_dephased(p1, 20 / K) - qe_dephased(p1)), 1e-6))
    tq = np.linspace(0, 20 / K, 40001)
    pc = moments_closed_form(p1, tq).physical(p1)[0]
    quad = 2 * p1.kappa * trapezoid(pc, tq)
    checks.append(at_most("dephasing.p_out_closed_vs_quadrature",
                          abs(quad - emission_probability_dephased(p1, tq[-1])), 1e-6))
    eta0 = qe_dephased(REFERENCE_PARAMS)
    drop = eta0 - qe_dephased(p4)
    checks.append(at_most("dephasing.qe_drop_4GHz_vs_0.012", abs(drop - 0.012), 5e-4))
    checks.append(within("dephasing.qe_drop_4GHz_percent", 100 * drop / eta0, 0.0, 2.0))
    sweep = [qe_dephased(p.with_(gamma_p=r * GHZ)) for r in np.linspace(0, 4, 41)]
    checks.append(flag("dephasing.qe_nonincreasing", bool(np.all(np.diff(sweep) <= 0))))
    tt = np.linspace(0, 1.25e-9, 4001)
    depths = [modulation_depth(tt, dephased_probabilities(p.with_(gamma_p=r * GHZ), tt).p_c)
              for r in DEPHASING_RATES_GHZ]
    checks.append(flag("dephasing.modulation_depth_decreasing", bool(np.all(np.diff(depths) < 0))))
    z = monte_carlo_zscores(p1, budget["n_traj"], seed)
    checks.append(at_most("dephasing.monte_carlo_max_z", z.max(), 3.0))
    ta = np.linspace(0, 5 / K, 301)
    ma = mean_amplitudes_dephased(p1, ta)
    ex = oracle.exact_mean_amplitudes(p1, ta)
    checks.append(at_most("dephasing.mean_amplitudes_vs_exact",
                          max(np.abs(ma.e - ex.e).max(), np.abs(ma.c - ex.c).max()), 1e-10))
    # oscillation-frequency shift of the exact I-system
    roots = oracle.secular_roots_exact(secular_problem(p25, "I"))
    osc = roots[np.argmax(roots.imag)].imag
    g = derive_rates(p25).g.real
    predicted = p25.gamma_p**2 / (16 * g)
    checks.append(at_most("dephasing.frequency_shift_relative",
                          abs((2 * g - osc) - predicted) / predicted, 0.1))
    m = oracle.exact_moments(p25, np.linspace(0, 20 / K, 2001))
    checks.append(flag("dephasing.exact_positivity", bool(min(m.i.min(), m.j.min()) >= -1e-12)))
    return checks


def spectra_checks(budget: dict, seed: int) -> list[Check]:
    p = REFERENCE_PARAMS
    checks = []
    for channel, (err, step) in splitting_errors(p).items():
        checks.append(at_most(f"spectra.splitting_{channel}", err / step, 1.0))
    for channel, err in parseval_errors(p).items():
        checks.append(at_most(f"spectra.parseval_{channel}", err, 1e-3))
    trends = spectral_trends(p)
    for channel, rows in trends.items():
        checks.append(flag(f"spectra.dephasing_trend_{channel}", strictly_monotone(rows)))
    p1 = p.with_(gamma_p=GHZ)
    checks.append(at_most("spectra.kernel_vs_closed_forward",
                          kernel_spectrum_error(p1, "forward", budget["kernel_points"]), 0.02))
    checks.append(at_most("spectra.kernel_vs_closed_side",
                          kernel_spectrum_error(p1, "side", budget["kernel_points"]), 0.02))
    checks.append(at_most("spectra.dephased_equals_coherent_gamma_p_zero", dephased_limit_error(p, 0.0), 1e-9))
    # the approach to the coherent limit is first order in gamma_p
    ratio = dephased_limit_error(p, 2e-4) / dephased_limit_error(p, 1e-4)
    checks.append(within("spectra.dephased_limit_linear_order", ratio, 1.9, 2.1))
    seps = {}
    for channel in ("side", "forward"):
        seps[channel] = [peak_separation(coherent_spectrum(
            p.with_(delta=d * p.g0), default_grid(p, channel), channel)) for d in (0, 0.8, 1.6, 2.4)]
    checks.append(flag("spectra.separation_grows_with_detuning",
                       all(np.all(np.diff(v) >= 0) for v in seps.values())))
    pd = p.with_(delta=2.4 * p.g0)
    fw = peak_widths(coherent_spectrum(pd, default_grid(pd, "forward"), "forward"))
    checks.append(at_most("spectra.forward_equal_peaks_detuned",
                          abs(fw[0]["height"] - fw[1]["height"]) / fw[0]["height"], 1e-6))
    grid = default_grid(p, "side")
    plus = coherent_spectrum(pd, grid, "side").values
    minus = coherent_spectrum(p.with_(delta=-pd.delta), grid, "side").values
    checks.append(at_most("spectra.side_mirror_symmetry", np.abs(plus - minus[::-1]).max() / plus.max(), 1e-12))
    return checks


def roots_checks(budget: dict, seed: int) -> list[Check]:
    checks = []
    p0 = REFERENCE_PARAMS
    worst = 0.0
    for label in ("I", "J", "H"):
        first, osc = root_errors(p0, label)
        worst = max(worst, first.max(), osc.max())
    checks.append(at_most("roots.gamma_p_zero_identity", worst / p0.g0, 1e-10))
    for r in (1.0, 2.5):
        p = p0.with_(gamma_p=r * GHZ)
        tol1, tol2 = root_tolerances(p)
        for label in ("I", "J", "H"):
            first, osc = root_errors(p, label)
            checks.append(at_most(f"roots.{label}_first_kind_{r}GHz", first.max() / tol1, 1.0))
            checks.append(at_most(f"roots.{label}_oscillatory_{r}GHz", osc.max() / tol2, 1.0))
    p = p0.with_(gamma_p=2.5 * GHZ)
    resid = 0.0
    for label in ("I", "J", "H"):
        prob = secular_problem(p, label)
        for z in oracle.secular_roots_exact(prob):
            resid = max(resid, abs(prob.det(z)) / p.g0**4)
    checks.append(at_most("roots.determinant_residual", resid, 1e-9))
    prob = secular_problem(p, "H")
    coeffs = oracle.secular_polynomial(prob)
    vieta = abs(oracle.secular_roots_exact(prob).sum() + coeffs[-2] / coeffs[-1]) / p.g0
    checks.append(at_most("roots.vieta_sum_H", vieta, 1e-9))
    return checks


_SUITE_FUNCS = {
    "coherent": coherent_checks,
    "dephasing": dephasing_checks,
    "spectra": spectra_checks,
    "roots": roots_checks,
}


def run_validate(suite: str = "all", seed: int = 12345, budget: str = "quick") -> dict:
    """Run a suite and return ``{"suite", "budget", "seed", "passed", "checks"}``."""
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; expected one of {SUITES}")
    if budget not in BUDGETS:
        raise ValueError(f"unknown budget {budget!r}; expected one of {tuple(BUDGETS)}")
    names = list(_SUITE_FUNCS) if suite == "all" else [suite]
    checks = []
    for name in names:
        start = time.perf_counter()
        found = _SUITE_FUNCS[name](BUDGETS[budget], seed)
        elapsed = time.perf_counter() - start
        for c in found:
            c.seconds = elapsed / len(found)
        checks.extend(found)
    return {
        "suite": suite,
        "budget": budget,
        "seed": seed,
        "passed": all(c.passed for c in checks),
        "checks": [c.as_dict() for c in checks],
    }
