"""Side and forward emission spectra, with and without pure dephasing.

Spectra are densities per unit angular frequency. The side spectrum is a
function of the offset from the emitter frequency, the forward spectrum of
the offset from the cavity frequency. Normalized spectra integrate to one;
unnormalized ones integrate to the probability emitted into that channel.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import trapezoid

from .coherent import EXCITED, amplitudes, check_time_grid, quantum_efficiency
from .dephasing import moments_closed_form, qe_dephased, side_normalization_dephased
from .params import GHZ, SystemParams, as_real, derive_rates

CHANNELS = ("side", "forward")
REFERENCES = {"side": "emitter", "forward": "cavity"}
TAIL_TOL = 1e-3
# asymptotic power of each channel's tail, S ~ 1/Omega**p
_TAIL_POWER = {"side": 2, "forward": 4}


def _check_channel(channel: str):
    if channel not in CHANNELS:
        raise ValueError(f"channel must be one of {CHANNELS}, got {channel!r}")


@dataclass(frozen=True)
class FrequencyGrid:
    """Ascending frequency offsets (rad/s) from ``reference`` ("emitter" or "cavity")."""

    values: np.ndarray
    reference: str

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size < 2:
            raise ValueError("frequency grid needs at least two points")
        if np.any(np.diff(values) <= 0):
            raise ValueError("frequency grid must be strictly ascending")
        if self.reference not in REFERENCES.values():
            raise ValueError(f"unknown reference {self.reference!r}")
        object.__setattr__(self, "values", values)

    @classmethod
    def uniform(cls, lo: float, hi: float, points: int, reference: str) -> "FrequencyGrid":
        return cls(np.linspace(lo, hi, points), reference)

    @property
    def step(self) -> float:
        return float(np.max(np.diff(self.values)))

    def ghz(self) -> np.ndarray:
        """Offsets as Omega/2pi in GHz."""
        return self.values / GHZ


def default_grid(params: SystemParams, channel: str, points: int = 4001,
                 span: float = 5.0) -> FrequencyGrid:
    """Figure grid: ``points`` uniform samples over +-span*g0."""
    _check_channel(channel)
    return FrequencyGrid.uniform(-span * params.g0, span * params.g0, points, REFERENCES[channel])


def integration_grid(params: SystemParams, channel: str, points: int = 40001,
                     span: float = 40.0) -> FrequencyGrid:
    """Wide grid over +-span*g for Parseval-type integrals."""
    _check_channel(channel)
    g = abs(derive_rates(params).g)
    return FrequencyGrid.uniform(-span * g, span * g, points, REFERENCES[channel])


@dataclass(frozen=True)
class Spectrum:
    grid: FrequencyGrid
    values: np.ndarray
    channel: str
    dephased: bool = False
    normalized: bool = False

    def __post_init__(self):
        _check_channel(self.channel)
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.values.shape:
            raise ValueError("spectrum values must match the grid")
        object.__setattr__(self, "values", values)

    def integral(self) -> float:
        return float(trapezoid(self.values, self.grid.values))

    def scaled(self, factor: float) -> "Spectrum":
        return replace(self, values=self.values * factor)

    def min_relative(self) -> float:
        """Most negative sample relative to the peak (0 if nonnegative)."""
        top = self.values.max()
        if top <= 0:
            return 0.0
        return float(min(self.values.min(), 0.0) / top)


@dataclass(frozen=True)
class CorrelationKernel:
    """Two-time correlations on a (t', tau) grid; kernels have shape (len(t), len(tau))."""

    t_grid: np.ndarray
    tau_grid: np.ndarray
    e_kernel: np.ndarray
    c_kernel: np.ndarray
    decay_rate: float = 0.0
    """Envelope rate of the kernels in tau, used for truncation estimates."""


def _reference_offset(params: SystemParams, grid: FrequencyGrid, channel: str):
    if grid.reference != REFERENCES[channel]:
        raise ValueError(
            f"{channel} spectrum needs a grid referenced to the {REFERENCES[channel]}, "
            f"got {grid.reference}"
        )
    return grid.values


def coherent_spectrum(params: SystemParams, grid: FrequencyGrid, channel: str) -> Spectrum:
    """Unnormalized spectrum without dephasing (gamma_p is ignored).

    Detuning enters through the generalized Rabi frequency g, so off
    resonance this is the strong-coupling form.
    """
    _check_channel(channel)
    w = _reference_offset(params, grid, channel)
    r = derive_rates(params)
    K, delta = r.K, params.delta
    g_sq = r.g**2
    if channel == "side":
        num = params.kappa - 1j * (w + delta)
        den = (K / 2 - 1j * delta / 2 - 1j * w) ** 2 + g_sq
        values = params.gamma / math.pi * np.abs(num / den) ** 2
    else:
        den = (K / 2 + 1j * delta / 2 - 1j * w) ** 2 + g_sq
        values = params.kappa / math.pi * params.g0**2 / np.abs(den) ** 2
    return Spectrum(grid, values, channel, dephased=False, normalized=False)


def _dephased_terms(params: SystemParams):
    r = derive_rates(params)
    g = as_real(r.g, "g")
    gp, eps, K, G = params.gamma_p, r.epsilon, r.K, r.Gamma
    a1 = K + gp * (1 + eps) / 2
    a3 = K + gp * (3 + eps) / 2
    d1 = a1**2 + 4 * g**2
    x = (3 * G / (2 * (K + gp + 4 * gp * eps))
         + (2 * g**2 - a3 * (G / 2 + gp)) / (a3**2 + 4 * g**2)
         - (G - gp) / (K + 2 * gp - 4 * gp * eps))
    return r, g, x, d1


def dephased_spectrum(params: SystemParams, grid: FrequencyGrid, channel: str,
                      printed: bool = False) -> Spectrum:
    """Unnormalized closed-form spectrum with pure dephasing (resonance only).

    The side channel's second bracket is built from the time integral of
    the emitter population; by default it uses the sign-corrected <J>, and
    ``printed=True`` keeps the form consistent with the uncorrected one.
    """
    _check_channel(channel)
    if params.delta != 0:
        raise ValueError("dephased spectra are only available on resonance (delta = 0)")
    w = _reference_offset(params, grid, channel)
    r, g, x, d1 = _dephased_terms(params)
    gp, eps, K, g0 = params.gamma_p, r.epsilon, r.K, params.g0
    p = (K + gp) / 2 - 1j * w
    rate = K - gp * eps
    pref = g0**2 / g**2
    if channel == "forward":
        den = p**2 + r.g2**2
        y = 1 / rate - (K + gp * (1 + eps / 2)) / d1
        rho = params.kappa / math.pi
        values = pref * (np.real(rho / den) * x
                         + np.real(rho * (params.gamma + gp - 1j * w) / den) * y)
    else:
        den = p**2 + r.g1**2
        num = K - 4 * g**2 * params.kappa / g0**2 + gp * (1 + (1 - 2 * g**2 / g0**2) * eps / 2)
        if not printed:
            num -= 2 * g**2 * gp / g0**2
        y = 1 / rate - num / d1
        rho = params.gamma / math.pi
        values = pref * (np.real(rho / den) * (-x)
                         + np.real(rho * (params.kappa + gp - 1j * w) / den) * y)
    return Spectrum(grid, values, channel, dephased=True, normalized=False)


def emission_spectrum(params: SystemParams, grid: FrequencyGrid, channel: str,
                      printed: bool = False) -> Spectrum:
    """Dephased closed form when gamma_p > 0, coherent form otherwise."""
    if params.gamma_p > 0:
        return dephased_spectrum(params, grid, channel, printed)
    return coherent_spectrum(params, grid, channel)


def correlation_kernel(params: SystemParams, t_grid, tau_grid, printed: bool = False) -> CorrelationKernel:
    """<E(t'+tau)E*(t')> and <C(t'+tau)C*(t')> on the product grid.

    Without dephasing these are products of deterministic amplitudes. With
    dephasing, the averaged amplitude equations propagate the one-time
    moments in tau (quantum regression), starting from the closed-form
    <|E|^2>, <|C|^2> and <E C*>.
    """
    t = check_time_grid(t_grid)
    tau = check_time_grid(tau_grid)
    r = derive_rates(params)
    gp = params.gamma_p
    if gp == 0:
        a_t = amplitudes(params, t, EXCITED)
        a_s = amplitudes(params, (t[:, None] + tau[None, :]), EXCITED)
        e_kernel = a_s.e * np.conj(a_t.e)[:, None]
        c_kernel = a_s.c * np.conj(a_t.c)[:, None]
        return CorrelationKernel(t, tau, e_kernel, c_kernel, decay_rate=r.K / 2)
    if params.delta != 0:
        raise ValueError("dephased correlation kernels need delta = 0")

    m = moments_closed_form(params, t, printed)
    p_c, p_e, ec = m.physical(params)
    G, g0, g1, g2 = r.Gamma, params.g0, r.g1, r.g2
    env = np.exp(-(r.K + gp) * tau / 2)
    s1 = np.sin(g1 * tau) / g1
    s2 = np.sin(g2 * tau) / g2
    e_diag = env * (np.cos(g1 * tau) + (G + gp) / 2 * s1)
    c_diag = env * (np.cos(g2 * tau) - (G - gp) / 2 * s2)
    e_kernel = e_diag[None, :] * p_e[:, None] + (env * -1j * g0 * s1)[None, :] * np.conj(ec)[:, None]
    c_kernel = c_diag[None, :] * p_c[:, None] + (env * -1j * g0 * s2)[None, :] * ec[:, None]
    return CorrelationKernel(t, tau, e_kernel, c_kernel, decay_rate=(r.K + gp) / 2)


def channel_probability(params: SystemParams, channel: str, printed: bool = False) -> float:
    """Closed-form total probability emitted into ``channel``.

    These are the exact integrals of the spectrum formula in use, so
    normalizing by them does not depend on the grid.
    """
    _check_channel(channel)
    if params.gamma_p > 0:
        if channel == "forward":
            return qe_dephased(params)
        return side_normalization_dephased(params, printed)
    if channel == "forward":
        return quantum_efficiency(params, strong_coupling=True)
    r = derive_rates(params)
    g = as_real(r.g, "g")
    K = r.K
    beta = (r.Gamma - 1j * params.delta) / 2
    d = K**2 + 4 * g**2
    cos_sq = (1 / K + K / d) / 2
    sin_sq = (1 / K - K / d) / 2
    sin_cos = g / d
    integral = cos_sq + 2 * beta.real / g * sin_cos + abs(beta) ** 2 / g**2 * sin_sq
    return 2 * params.gamma * integral


def tail_estimate(spectrum: Spectrum) -> float:
    """Estimated weight beyond the grid edges, from the channel's power-law tail."""
    p = _TAIL_POWER[spectrum.channel]
    w, s = spectrum.grid.values, spectrum.values
    return float((s[0] * abs(w[0]) + s[-1] * abs(w[-1])) / (p - 1))


def normalize_spectrum(spectrum: Spectrum, params: SystemParams, method: str = "closed",
                       printed: bool = False) -> Spectrum:
    """Divide by the total probability emitted into the channel.

    ``method="closed"`` uses :func:`channel_probability`; ``"quadrature"``
    integrates the sampled values and rejects grids whose truncated tails
    exceed 1e-3 of the integral.
    """
    if spectrum.normalized:
        raise ValueError("spectrum is already normalized")
    if method == "closed":
        norm = channel_probability(params, spectrum.channel, printed)
    elif method == "quadrature":
        norm = spectrum.integral()
        tail = tail_estimate(spectrum)
        if tail > TAIL_TOL * norm:
            raise ValueError(
                f"grid too narrow: estimated tail {tail:.3g} exceeds {TAIL_TOL:g} of the integral")
    else:
        raise ValueError(f"unknown normalization method {method!r}")
    if not norm > 0:
        raise ValueError("channel carries no emission; cannot normalize")
    return replace(spectrum, values=spectrum.values / norm, normalized=True)


def normal_mode_splittings(params: SystemParams) -> dict:
    """Peak separations of the side and forward spectra, with 2g for comparison (rad/s)."""
    g0, kappa, gamma = params.g0, params.kappa, params.gamma
    rad_s = math.sqrt(g0**4 + 2 * g0**2 * kappa * (kappa + gamma)) - kappa**2
    rad_f = g0**2 - (kappa**2 + gamma**2) / 2
    if rad_s < 0 or rad_f < 0:
        raise ValueError("no normal-mode splitting: a radicand is negative")
    g = derive_rates(params).g
    return {
        "delta_omega_s": 2 * math.sqrt(rad_s),
        "delta_omega_f": 2 * math.sqrt(rad_f),
        "two_g": 2 * as_real(g, "g"),
    }


def splittings_ghz(params: SystemParams) -> dict:
    s = normal_mode_splittings(params)
    return {
        "delta_omega_s_ghz": s["delta_omega_s"] / GHZ,
        "delta_omega_f_ghz": s["delta_omega_f"] / GHZ,
        "two_g_ghz": s["two_g"] / GHZ,
    }


def find_peaks(values, count: int = 2) -> np.ndarray:
    """Indices of the ``count`` highest interior local maxima, in ascending order."""
    values = np.asarray(values)
    mask = (values[1:-1] > values[:-2]) & (values[1:-1] >= values[2:])
    idx = np.flatnonzero(mask) + 1
    if idx.size < count:
        raise ValueError(f"found {idx.size} local maxima, need {count}")
    top = idx[np.argsort(values[idx])[::-1][:count]]
    return np.sort(top)


def peak_separation(spectrum: Spectrum) -> float:
    i, j = find_peaks(spectrum.values, 2)
    return float(spectrum.grid.values[j] - spectrum.grid.values[i])


def _crossing(w, s, i, j, half):
    # linear interpolation of s == half between neighbouring samples i, j
    return w[i] + (half - s[i]) * (w[j] - w[i]) / (s[j] - s[i])


def peak_widths(spectrum: Spectrum, count: int = 2) -> list[dict]:
    """Height, position and full width at half maximum of each peak."""
    w, s = spectrum.grid.values, spectrum.values
    out = []
    for k in find_peaks(s, count):
        half = s[k] / 2
        left = k
        while left > 0 and s[left] > half:
            left -= 1
        right = k
        while right < s.size - 1 and s[right] > half:
            right += 1
        if s[left] > half or s[right] > half:
            raise ValueError("peak does not fall to half maximum within the grid")
        out.append({
            "position": float(w[k]),
            "height": float(s[k]),
            "fwhm": float(_crossing(w, s, right - 1, right, half) - _crossing(w, s, left, left + 1, half)),
        })
    return out


def check_nonnegative(spectrum: Spectrum, tol: float = 1e-9):
    if spectrum.min_relative() < -tol:
        warnings.warn(f"spectrum dips to {spectrum.min_relative():.3g} of its peak", stacklevel=2)
