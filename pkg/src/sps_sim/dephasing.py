"""Stochastically averaged dynamics under phase-diffusion dephasing.

The emitter phase performs a Wiener walk with diffusion coefficient
``gamma_p``. Averaging the linear stochastic equations gives constant-matrix
systems d<v>/dt = (M0 - gamma_p*M1^2) <v>; this module holds those systems
and the strong-coupling closed forms for their solutions. Everything here
assumes the emitter and cavity are on resonance.

Tilde variables strip the bare decay: E = E~ exp(-gamma t) and
C = C~ exp(-kappa t). The one-time moments are I = |C~|^2, J = |E~|^2 and
H = E~ C~*.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .coherent import (
    EXCITED,
    AmplitudePair,
    ProbabilityTrace,
    _check_nonnegative,
    _sin_over,
    check_time_grid,
    side_emission,
)
from .params import SystemParams, as_real, derive_rates, validate_regime

SYSTEM_LABELS = ("mean", "mean_c", "I", "J", "H")


def _require_resonance(params: SystemParams, what: str):
    if params.delta != 0:
        raise ValueError(f"{what} is only available on resonance (delta = 0)")


@dataclass(frozen=True)
class SecularProblem:
    """A linear system d<v>/dt = (m0 - gamma_p * m1 @ m1) <v>.

    ``label`` names which moment system it is: ``"mean"`` for the mean
    amplitudes (E~, Y), ``"I"``, ``"J"`` or ``"H"`` for the second-moment
    systems, each with its own auxiliary variables.
    """

    m0: np.ndarray
    m1: np.ndarray
    gamma_p: float
    label: str
    params: SystemParams | None = field(default=None, compare=False)

    def __post_init__(self):
        m0 = np.asarray(self.m0, dtype=complex)
        m1 = np.asarray(self.m1, dtype=complex)
        if m0.ndim != 2 or m0.shape[0] != m0.shape[1] or m0.shape != m1.shape:
            raise ValueError("m0 and m1 must be square matrices of equal size")
        if self.label not in SYSTEM_LABELS:
            raise ValueError(f"unknown system label {self.label!r}")
        object.__setattr__(self, "m0", m0)
        object.__setattr__(self, "m1", m1)

    @property
    def dim(self) -> int:
        return self.m0.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        return self.m0 - self.gamma_p * self.m1 @ self.m1

    def resolvent_matrix(self, z: complex) -> np.ndarray:
        """N(z) = z*I - (m0 - gamma_p*m1^2)."""
        return z * np.eye(self.dim) - self.matrix

    def det(self, z: complex) -> complex:
        return complex(np.linalg.det(self.resolvent_matrix(z)))

    @property
    def initial(self) -> np.ndarray:
        """Averaged initial vector for E(0)=1, C(0)=0."""
        if self.label in ("mean", "mean_c"):
            return np.array([1, 0], dtype=complex)
        return np.array([0, 0, 0, 1], dtype=complex)


def secular_problem(params: SystemParams, which: str) -> SecularProblem:
    """Assemble one of the averaged linear systems.

    ``"mean"``: v = (E~, Y) with Y = exp(-Gamma t + i phi) C~.
    ``"mean_c"``: v = (X, C~) with X = exp(Gamma t - i phi) E~.
    ``"I"``: v = (U, U*, I, Z), U = exp(Gamma t - i phi) H, Z = exp(2 Gamma t) J.
    ``"J"``: v = (U, U*, W, J), U = exp(-Gamma t - i phi) H, W = exp(-2 Gamma t) I.
    ``"H"``: v = (H, U, W, Z), U = exp(2 i phi) H*, W = exp(-Gamma t + i phi) I,
    Z = exp(Gamma t + i phi) J.
    """
    g0 = params.g0
    G = params.kappa - params.gamma
    ig = 1j * g0
    if which == "mean":
        m0 = [[0, -ig], [-ig, -G]]
        m1 = np.diag([0, 1])
    elif which == "mean_c":
        m0 = [[G, -ig], [-ig, 0]]
        m1 = np.diag([-1, 0])
    elif which == "I":
        m0 = [[G, 0, -ig, ig],
              [0, G, ig, -ig],
              [-ig, ig, 0, 0],
              [ig, -ig, 0, 2 * G]]
        m1 = np.diag([-1, 1, 0, 0])
    elif which == "J":
        m0 = [[-G, 0, -ig, ig],
              [0, -G, ig, -ig],
              [-ig, ig, -2 * G, 0],
              [ig, -ig, 0, 0]]
        m1 = np.diag([-1, 1, 0, 0])
    elif which == "H":
        m0 = [[0, 0, -ig, ig],
              [0, 0, ig, -ig],
              [-ig, ig, -G, 0],
              [ig, -ig, 0, G]]
        m1 = np.diag([0, 2, 1, 1])
    else:
        raise ValueError(f"unknown system {which!r}; expected one of {SYSTEM_LABELS}")
    return SecularProblem(np.array(m0, dtype=complex), m1, params.gamma_p, which, params)


@dataclass(frozen=True)
class OneTimeMoments:
    i: np.ndarray | float
    j: np.ndarray | float
    h: np.ndarray | complex
    t: np.ndarray | float

    def physical(self, params: SystemParams):
        """(<|C|^2>, <|E|^2>, <E C*>) with the bare decay restored."""
        t = np.asarray(self.t)
        return (
            np.exp(-2 * params.kappa * t) * self.i,
            np.exp(-2 * params.gamma * t) * self.j,
            np.exp(-(params.kappa + params.gamma) * t) * self.h,
        )


def mean_amplitudes_dephased(params: SystemParams, t, init: AmplitudePair = EXCITED) -> AmplitudePair:
    """Averaged amplitudes <E(t)>, <C(t)>.

    The two rows oscillate at different frequencies g1 and g2 under a
    common envelope exp(-(K + gamma_p) t / 2).
    """
    _require_resonance(params, "mean_amplitudes_dephased")
    t_arr = _check_nonnegative(t)
    r = derive_rates(params)
    gp, G, g0 = params.gamma_p, r.Gamma, params.g0
    env = np.exp(-(r.K + gp) * t_arr / 2)
    s1 = _sin_over(r.g1, t_arr)
    s2 = _sin_over(r.g2, t_arr)
    c1 = np.cos(r.g1 * t_arr)
    c2 = np.cos(r.g2 * t_arr)
    e = env * ((c1 + (G + gp) / 2 * s1) * init.e - 1j * g0 * s1 * init.c)
    c = env * (-1j * g0 * s2 * init.e + (c2 - (G - gp) / 2 * s2) * init.c)
    if np.ndim(t) == 0:
        return AmplitudePair(complex(e), complex(c), float(t))
    return AmplitudePair(e, c, t_arr)


def secular_roots_approx(params: SystemParams, which: str) -> list[complex]:
    """Strong-coupling approximations to the poles of each averaged system.

    First-kind (slow, non-oscillating) roots come first, then the pair
    near +-2ig. The mean-amplitude systems' roots are exact.
    """
    _require_resonance(params, "secular_roots_approx")
    report = validate_regime(params)
    if not report.passed:
        warnings.warn(
            f"parameters outside the strong-coupling regime ({', '.join(report.failed())}); "
            "approximate roots may be inaccurate",
            stacklevel=2,
        )
    r = derive_rates(params)
    gp, G, eps = params.gamma_p, r.Gamma, r.epsilon
    if which == "mean":
        g1 = r.g1
        return [-(G + gp) / 2 + 1j * g1, -(G + gp) / 2 - 1j * g1]
    if which == "mean_c":
        g2 = r.g2
        return [(G - gp) / 2 + 1j * g2, (G - gp) / 2 - 1j * g2]
    g = as_real(r.g, "g")
    if which == "I":
        osc = G - gp * (1 + eps) / 2
        roots = [G - gp, G + gp * eps, osc + 2j * g, osc - 2j * g]
    elif which == "J":
        osc = -G - gp * (1 + eps) / 2
        roots = [-G - gp, -G + gp * eps, osc + 2j * g, osc - 2j * g]
    elif which == "H":
        osc = -gp * (3 + eps) / 2
        roots = [-gp * (1 + 4 * eps), -2 * gp * (1 - 2 * eps), osc + 2j * g, osc - 2j * g]
    else:
        raise ValueError(f"unknown system {which!r}")
    return [complex(z) for z in roots]


def _j_sin_coefficient(params, g, gp, G, printed):
    # printed form carries (G - gp/2); the residue expansion gives (G + gp/2)
    shift = -gp / 2 if printed else gp / 2
    return gp / (4 * g) - g * (G + shift) / params.g0**2


def moments_closed_form(params: SystemParams, t, printed: bool = False) -> OneTimeMoments:
    """Approximate <I>, <J>, <H> for E(0)=1, C(0)=0.

    First order in gamma_p/g in the coefficients and in gamma_p*eps/g in the
    exponents. With ``printed=True`` the <J> sin coefficient uses the sign
    exactly as usually quoted, which carries an O(gamma_p/g) error; the
    default fixes the sign so <J>'(0) = 0 as the exact system requires.
    """
    _require_resonance(params, "moments_closed_form")
    t = _check_nonnegative(t)
    r = derive_rates(params)
    g = as_real(r.g, "g")
    gp, G, eps, g0 = params.gamma_p, r.Gamma, r.epsilon, params.g0
    pref = g0**2 / (2 * g**2)
    slow = np.exp(gp * (1 + 3 * eps) * t / 2)
    s2, c2 = np.sin(2 * g * t), np.cos(2 * g * t)

    i = pref * np.exp((G - gp * (1 + eps) / 2) * t) * (slow - gp / (4 * g) * s2 - c2)
    j = pref * np.exp(-(G + gp * (1 + eps) / 2) * t) * (
        slow - _j_sin_coefficient(params, g, gp, G, printed) * s2
        - (1 - 2 * g**2 / g0**2) * c2
    )
    h = 1j * g0 / (2 * g) * np.exp(-gp * (3 + eps) * t / 2) * (
        3 * G / (2 * g) * np.exp(gp * (1 - 7 * eps) * t / 2)
        - (G - gp) / g * np.exp(-gp * (1 - 9 * eps) * t / 2)
        - (G + 2 * gp) / (2 * g) * c2
        + s2
    )
    return OneTimeMoments(i, j, h, t)


def emission_probability_dephased(params: SystemParams, t) -> np.ndarray:
    """Averaged forward emission probability 2*kappa * integral of <|C|^2>."""
    _require_resonance(params, "emission_probability_dephased")
    t = _check_nonnegative(t)
    r = derive_rates(params)
    g = as_real(r.g, "g")
    gp, eps, K, kappa, g0 = params.gamma_p, r.epsilon, r.K, params.kappa, params.g0
    pref = kappa * g0**2 / g**2
    rate = K - gp * eps
    a1 = K + gp * (1 + eps) / 2
    denom = a1**2 + (2 * g) ** 2
    steady = -np.expm1(-rate * t) / rate - (K + gp * (1 + eps / 2)) / denom
    s2, c2 = np.sin(2 * g * t), np.cos(2 * g * t)
    ringing = np.exp(-a1 * t) / denom * (
        a1 * (gp / (4 * g) * s2 + c2) + 2 * g * (gp / (4 * g) * c2 - s2)
    )
    return pref * (steady + ringing)


def qe_dephased(params: SystemParams) -> float:
    """Long-time forward emission probability with pure dephasing."""
    _require_resonance(params, "qe_dephased")
    r = derive_rates(params)
    g = as_real(r.g, "g")
    gp, eps, K = params.gamma_p, r.epsilon, r.K
    rate = K - gp * eps
    if rate <= 0:
        raise ValueError("K - gamma_p*epsilon must be positive")
    a1 = K + gp * (1 + eps) / 2
    denom = a1**2 + (2 * g) ** 2
    return (params.g0**2 / g**2 * params.kappa / rate
            * (1 - rate * (K + gp * (1 + eps / 2)) / denom))


def side_normalization_dephased(params: SystemParams, printed: bool = False) -> float:
    """2*gamma * integral over all time of the closed-form <|E|^2>."""
    _require_resonance(params, "side_normalization_dephased")
    r = derive_rates(params)
    g = as_real(r.g, "g")
    gp, eps, K, G, g0 = params.gamma_p, r.epsilon, r.K, r.Gamma, params.g0
    a1 = K + gp * (1 + eps) / 2
    b = gp * (1 + 3 * eps) / 2
    coef_sin = _j_sin_coefficient(params, g, gp, G, printed)
    coef_cos = 1 - 2 * g**2 / g0**2
    denom = a1**2 + 4 * g**2
    integral = g0**2 / (2 * g**2) * (
        1 / (a1 - b) - coef_sin * 2 * g / denom - coef_cos * a1 / denom)
    return 2 * params.gamma * integral


def dephased_probabilities(params: SystemParams, times, printed: bool = False) -> ProbabilityTrace:
    times = check_time_grid(times)
    m = moments_closed_form(params, times, printed)
    p_c, p_e, _ = m.physical(params)
    p_out = emission_probability_dephased(params, times)
    p_side = side_emission(params.gamma, times, p_e)
    return ProbabilityTrace(times, p_e, p_c, p_out, p_side)


def modulation_depth(times, values) -> float:
    """(max - min)/(max + min) between the first two local maxima of ``values``."""
    values = np.asarray(values)
    interior = (values[1:-1] > values[:-2]) & (values[1:-1] >= values[2:])
    peaks = np.flatnonzero(interior) + 1
    if peaks.size < 2:
        raise ValueError("need at least two local maxima to measure a modulation depth")
    window = values[peaks[0]:peaks[1] + 1]
    hi, lo = window.max(), window.min()
    return float((hi - lo) / (hi + lo))
