"""Coherent (dephasing-free) dynamics of a single excitation.

The exact propagator uses the complex frequency ``lam``; passing
``strong_coupling=True`` swaps in the generalized Rabi frequency ``g``,
which is the familiar textbook form and is exact only on resonance.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson

from .params import SystemParams, as_real, derive_rates

NORM_TOL = 1e-10


@dataclass(frozen=True)
class AmplitudePair:
    """Amplitudes E (excited emitter) and C (one cavity photon) at time(s) ``t``."""

    e: complex | np.ndarray
    c: complex | np.ndarray
    t: float | np.ndarray = 0.0

    def norm_sq(self):
        return np.abs(self.e) ** 2 + np.abs(self.c) ** 2

    def as_vector(self) -> np.ndarray:
        return np.array([self.e, self.c], dtype=complex)


EXCITED = AmplitudePair(1.0 + 0j, 0j, 0.0)


@dataclass(frozen=True)
class ProbabilityTrace:
    times: np.ndarray
    p_e: np.ndarray
    p_c: np.ndarray
    p_out: np.ndarray
    p_side: np.ndarray

    def total(self) -> np.ndarray:
        return self.p_e + self.p_c + self.p_out + self.p_side


def default_time_grid(points: int = 2001, t_max: float = 1.25e-9) -> np.ndarray:
    return np.linspace(0.0, t_max, points)


def check_time_grid(times) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("time grid must be a non-empty 1-D array")
    if times[0] != 0.0:
        raise ValueError(f"time grid must start at 0, starts at {times[0]}")
    if times.size > 1 and np.any(np.diff(times) <= 0):
        raise ValueError("time grid must be strictly ascending")
    return times


def _check_nonnegative(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("time must be nonnegative")
    return t


def _sin_over(lam: complex, t):
    """sin(lam*t)/lam, continuous through lam = 0."""
    if lam == 0:
        return t + 0j
    return np.sin(lam * t) / lam


def _frequency(params: SystemParams, strong_coupling: bool) -> complex:
    rates = derive_rates(params)
    return rates.g if strong_coupling else rates.lam


def propagator(params: SystemParams, t, strong_coupling: bool = False) -> np.ndarray:
    """Matrix mapping (E(0), C(0)) to (E(t), C(t)).

    Vectorized over ``t``; the result has shape ``t.shape + (2, 2)``.
    """
    t = _check_nonnegative(t)
    rates = derive_rates(params)
    lam = _frequency(params, strong_coupling)
    beta = (rates.Gamma - 1j * params.delta) / 2
    cos = np.cos(lam * t)
    sin = _sin_over(lam, t)
    env = np.exp(-rates.K * t / 2)
    phase = np.exp(1j * params.delta * t / 2)

    out = np.empty(t.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = env * phase * (cos + beta * sin)
    out[..., 0, 1] = env * phase * (-1j * params.g0 * sin)
    out[..., 1, 0] = env / phase * (-1j * params.g0 * sin)
    out[..., 1, 1] = env / phase * (cos - beta * sin)
    return out


def amplitudes(params: SystemParams, t, init: AmplitudePair = EXCITED,
               strong_coupling: bool = False) -> AmplitudePair:
    """E(t) and C(t) evolved from ``init``; ``t`` may be a scalar or an array."""
    if np.any(init.norm_sq() > 1 + NORM_TOL):
        raise ValueError("initial state has |E|^2 + |C|^2 > 1")
    t_arr = _check_nonnegative(t)
    u = propagator(params, t_arr, strong_coupling)
    v = init.as_vector()
    e = u[..., 0, 0] * v[0] + u[..., 0, 1] * v[1]
    c = u[..., 1, 0] * v[0] + u[..., 1, 1] * v[1]
    if np.ndim(t) == 0:
        return AmplitudePair(complex(e), complex(c), float(t))
    return AmplitudePair(e, c, t_arr)


def _decay_integral(rate, t):
    """Integral of exp(-rate*s) over [0, t], finite as rate -> 0."""
    rate = complex(rate)
    if rate == 0:
        return t + 0j
    return -np.expm1(-rate * t) / rate


def emission_probability(params: SystemParams, t, strong_coupling: bool = False):
    """Forward emission probability P_o(t) = 2*kappa * integral of |C|^2.

    The exact branch integrates |C|^2 = (g0/|lam|)^2 exp(-Kt) |sin(lam t)|^2
    in closed form for any detuning; on resonance it coincides with the
    strong-coupling branch.
    """
    t = _check_nonnegative(t)
    rates = derive_rates(params)
    K, kappa, g0 = rates.K, params.kappa, params.g0
    if strong_coupling:
        g = as_real(rates.g, "g")
        prefactor = 4 * kappa * g0**2 / (K * (K**2 + 4 * g**2))
        bracket = (1 + K**2 / (2 * g**2) * np.sin(g * t) ** 2
                   + K / (2 * g) * np.sin(2 * g * t))
        return prefactor * (1 - np.exp(-K * t) * bracket)

    lam = rates.lam
    if lam == 0:
        # |C|^2 = g0^2 t^2 exp(-Kt)
        return 2 * kappa * g0**2 * (
            2 / K**3 - np.exp(-K * t) * (t**2 / K + 2 * t / K**2 + 2 / K**3))
    a, b = lam.real, lam.imag
    cosh_part = 0.5 * (_decay_integral(K - 2 * b, t) + _decay_integral(K + 2 * b, t))
    cos_part = _decay_integral(K - 2j * a, t)
    return (kappa * g0**2 / abs(lam) ** 2 * (cosh_part - cos_part)).real


def probabilities(params: SystemParams, times, strong_coupling: bool = False) -> ProbabilityTrace:
    """Populations and cumulative emission probabilities for E(0)=1, C(0)=0."""
    times = check_time_grid(times)
    amp = amplitudes(params, times, EXCITED, strong_coupling)
    p_e = np.abs(amp.e) ** 2
    p_c = np.abs(amp.c) ** 2
    p_out = emission_probability(params, times, strong_coupling)
    p_side = side_emission(params.gamma, times, p_e)
    return ProbabilityTrace(times, p_e, p_c, p_out, p_side)


def side_emission(gamma: float, times: np.ndarray, p_e: np.ndarray) -> np.ndarray:
    """Cumulative side-mode emission 2*gamma * integral of P_e, by quadrature."""
    if times.size == 1:
        return np.zeros(1)
    return cumulative_simpson(2 * gamma * p_e, x=times, initial=0.0)


def quantum_efficiency(params: SystemParams, strong_coupling: bool = False) -> float:
    """Long-time forward emission probability.

    On resonance this is ``g0**2/(g0**2 + kappa*gamma) * kappa/(kappa + gamma)``.
    Off resonance the exact limit is ``4*kappa*K*g0**2 / (K**2*(K**2 + 4*g**2)
    - Gamma**2*delta**2)``; ``strong_coupling=True`` drops the last term.
    """
    rates = derive_rates(params)
    K = rates.K
    if K <= 0:
        raise ValueError("quantum efficiency needs kappa + gamma > 0")
    g_sq = (rates.g**2).real
    kappa, g0 = params.kappa, params.g0
    if strong_coupling:
        return 4 * kappa * g0**2 / (K * (K**2 + 4 * g_sq))
    return 4 * kappa * K * g0**2 / (K**2 * (K**2 + 4 * g_sq) - (rates.Gamma * params.delta) ** 2)
