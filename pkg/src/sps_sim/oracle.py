"""Independent numerical ground truth for the closed forms.

Nothing here relies on a strong-coupling approximation: the coherent
amplitudes come from adaptive ODE integration, the averaged moments from
matrix exponentials of the averaged linear systems, the secular roots from
companion matrices, and the phase-diffusion averages from Monte Carlo over
sampled Wiener paths.
"""
from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.integrate import solve_ivp, trapezoid
from scipy.linalg import expm

from .coherent import EXCITED, AmplitudePair, ProbabilityTrace, check_time_grid, side_emission
from .dephasing import OneTimeMoments, SecularProblem, secular_problem
from .params import SystemParams, derive_rates
from .spectra import CorrelationKernel, FrequencyGrid, Spectrum

ODE_RTOL = 1e-10
ODE_ATOL = 1e-12
COND_LIMIT = 1e8
MAX_PHASE_STEP = 0.05
MAX_COUPLING_STEP = 0.02
TAIL_TOL = 1e-3
THREADS_ENV = "SPS_SIM_THREADS"


# -- coherent ODE ---------------------------------------------------------

def integrate_coherent_ode(params: SystemParams, grid, init: AmplitudePair = EXCITED,
                           rtol: float = ODE_RTOL, atol: float = ODE_ATOL) -> AmplitudePair:
    """Integrate dE/dt = -i g0 e^{i delta t} C - gamma E, dC/dt = -i g0 e^{-i delta t} E - kappa C.

    The complex pair is split into a real 4-vector and handed to an
    adaptive 8th-order Runge-Kutta scheme.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be a non-empty ascending 1-D array")
    g0, kappa, gamma, delta = params.g0, params.kappa, params.gamma, params.delta

    def rhs(t, y):
        e = y[0] + 1j * y[1]
        c = y[2] + 1j * y[3]
        phase = np.exp(1j * delta * t)
        de = -1j * g0 * phase * c - gamma * e
        dc = -1j * g0 * np.conj(phase) * e - kappa * c
        return [de.real, de.imag, dc.real, dc.imag]

    e0, c0 = complex(init.e), complex(init.c)
    y0 = [e0.real, e0.imag, c0.real, c0.imag]
    t0 = float(init.t)
    if grid[0] < t0:
        raise ValueError("grid starts before the initial time")
    if grid[-1] == t0:
        ys = np.tile(np.array(y0)[:, None], grid.size)
    else:
        sol = solve_ivp(rhs, (t0, grid[-1]), y0, method="DOP853", t_eval=grid,
                        rtol=rtol, atol=atol)
        if sol.status != 0:
            t_fail = sol.t[-1] if sol.t.size else t0
            raise RuntimeError(f"ODE integration failed at t = {t_fail:.6g} s: {sol.message}")
        ys = sol.y
    return AmplitudePair(ys[0] + 1j * ys[1], ys[2] + 1j * ys[3], grid)


# -- exact averaged linear systems -----------------------------------------

def exact_moments_linear_system(problem: SecularProblem, init, grid) -> np.ndarray:
    """Solve d<v>/dt = A <v> exactly on ``grid``; returns shape (len(grid), n).

    Uses the eigendecomposition of A when its eigenbasis is well conditioned
    and falls back to a dense matrix exponential per time otherwise.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be an ascending 1-D array")
    a = problem.matrix
    v0 = np.asarray(init, dtype=complex)
    if v0.shape != (problem.dim,):
        raise ValueError(f"initial vector must have length {problem.dim}")
    w, vecs = np.linalg.eig(a)
    cond = np.linalg.cond(vecs)
    if np.isfinite(cond) and cond < COND_LIMIT:
        coef = np.linalg.solve(vecs, v0)
        return (np.exp(np.outer(grid, w)) * coef) @ vecs.T
    warnings.warn(
        f"ill-conditioned eigenbasis (cond = {cond:.3g}); using dense matrix exponential",
        stacklevel=2,
    )
    return np.array([expm(a * t) @ v0 for t in grid])


_MOMENT_INDEX = {"I": 2, "J": 3, "H": 0}


def exact_moments(params: SystemParams, t) -> OneTimeMoments:
    """<I>, <J>, <H> from the exact averaged systems, for E(0)=1, C(0)=0."""
    if params.delta != 0:
        raise ValueError("the averaged moment systems assume delta = 0")
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = {}
    for label, idx in _MOMENT_INDEX.items():
        problem = secular_problem(params, label)
        out[label] = exact_moments_linear_system(problem, problem.initial, t)[:, idx]
    return OneTimeMoments(out["I"].real, out["J"].real, out["H"], t)


def exact_mean_amplitudes(params: SystemParams, t) -> AmplitudePair:
    """<E(t)>, <C(t)> from the exact mean-amplitude system."""
    if params.delta != 0:
        raise ValueError("the averaged amplitude system assumes delta = 0")
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = []
    for label, idx, rate in (("mean", 0, params.gamma), ("mean_c", 1, params.kappa)):
        problem = secular_problem(params, label)
        v = exact_moments_linear_system(problem, problem.initial, t)
        out.append(np.exp(-rate * t) * v[:, idx])
    return AmplitudePair(out[0], out[1], t)


def exact_dephased_probabilities(params: SystemParams, times) -> ProbabilityTrace:
    """Averaged populations and cumulative emissions from the exact moments."""
    times = check_time_grid(times)
    m = exact_moments(params, times)
    p_c, p_e, _ = m.physical(params)
    p_out = side_emission(params.kappa, times, p_c)
    p_side = side_emission(params.gamma, times, p_e)
    return ProbabilityTrace(times, p_e, p_c, p_out, p_side)


# -- secular roots ----------------------------------------------------------

def secular_polynomial(problem: SecularProblem) -> np.ndarray:
    """Coefficients (lowest order first) of det N(z) for a labeled system."""
    params = problem.params
    if params is None:
        raise ValueError("secular polynomial needs the problem's parameters")
    gp, g0 = problem.gamma_p, params.g0
    G = params.kappa - params.gamma
    z = [0.0, 1.0]
    if problem.label == "mean":
        return P.polyadd(P.polymul(z, [G + gp, 1.0]), [g0**2])
    if problem.label == "mean_c":
        return P.polyadd(P.polymul(z, [gp - G, 1.0]), [g0**2])
    if problem.label in ("I", "J"):
        s = 1.0 if problem.label == "I" else -1.0
        factor = [gp - s * G, 1.0]
        cubic = P.polyadd(
            P.polymul(P.polymul(z, [-2 * s * G, 1.0]), factor),
            P.polymul([4 * g0**2], [-s * G, 1.0]),
        )
        return P.polymul(factor, cubic)
    if problem.label == "H":
        quad = P.polysub(P.polypow([gp, 1.0], 2), [G**2])
        return P.polyadd(
            P.polymul(P.polymul(z, [4 * gp, 1.0]), quad),
            P.polymul([4 * g0**2], P.polymul([gp, 1.0], [2 * gp, 1.0])),
        )
    raise ValueError(f"unknown system {problem.label!r}")


def companion_matrix(coeffs) -> np.ndarray:
    """Companion matrix of the polynomial with coefficients lowest order first."""
    c = np.trim_zeros(np.asarray(coeffs, dtype=complex), "b")
    n = c.size - 1
    if n < 1:
        raise ValueError("polynomial must have degree at least 1")
    mat = np.zeros((n, n), dtype=complex)
    mat[1:, :-1] = np.eye(n - 1)
    mat[:, -1] = -c[:-1] / c[-1]
    return mat


def polynomial_roots(coeffs) -> np.ndarray:
    """Roots via companion-matrix eigenvalues, sorted by real then imaginary part.

    Exact zero low-order coefficients are factored out first, so roots at
    the origin come back exactly.
    """
    c = np.trim_zeros(np.asarray(coeffs, dtype=complex), "b")
    n_zero = 0
    while n_zero < c.size - 1 and c[n_zero] == 0:
        n_zero += 1
    rest = c[n_zero:]
    roots = np.zeros(n_zero, dtype=complex)
    if rest.size > 1:
        roots = np.concatenate([roots, np.linalg.eigvals(companion_matrix(rest))])
    return np.sort_complex(roots)


def secular_roots_exact(problem: SecularProblem) -> np.ndarray:
    """Roots of det N(z) = 0, sorted by real part then imaginary part.

    For the I and J systems the explicit linear factor is split off before
    the companion step, leaving a cubic with simple roots.
    """
    if problem.label in ("I", "J"):
        params = problem.params
        s = 1.0 if problem.label == "I" else -1.0
        z1 = s * (params.kappa - params.gamma) - problem.gamma_p
        poly = secular_polynomial(problem)
        cubic, rem = P.polydiv(poly, [-z1, 1.0])
        return np.sort_complex(np.concatenate([[z1], polynomial_roots(cubic)]))
    return polynomial_roots(secular_polynomial(problem))


# -- Monte Carlo over phase paths ------------------------------------------

@dataclass(frozen=True)
class PhasePath:
    times: np.ndarray
    phi: np.ndarray
    seed: int


def _check_uniform(grid) -> tuple[np.ndarray, float]:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ValueError("grid needs at least two points")
    steps = np.diff(grid)
    if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
        raise ValueError("grid must be uniform and ascending")
    return grid, float(steps[0])


def _stream(seed: int, index: int) -> np.random.Generator:
    # one counter-based stream per trajectory, independent of execution order
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


def sample_phase_path(gamma_p: float, grid, seed: int, index: int = 0) -> PhasePath:
    """Wiener phase path with increments N(0, 2*gamma_p*dt) and phi(0) = 0."""
    if gamma_p < 0:
        raise ValueError("gamma_p must be nonnegative")
    grid, dt = _check_uniform(grid)
    steps = _stream(seed, index).standard_normal(grid.size - 1) * math.sqrt(2 * gamma_p * dt)
    phi = np.concatenate([[0.0], np.cumsum(steps)])
    return PhasePath(grid, phi, seed)


@dataclass(frozen=True)
class MonteCarloEstimate:
    """Trajectory averages and their standard errors on ``times``.

    ``mean`` holds complex ``E``, ``C``, ``H`` (= E C*) and real ``abs2_E``,
    ``abs2_C``; ``stderr`` holds real standard errors keyed ``re_E``,
    ``im_E``, ``re_C``, ``im_C``, ``abs2_E``, ``abs2_C``, ``re_H``, ``im_H``.
    """

    times: np.ndarray
    mean: dict
    stderr: dict
    n_traj: int
    seed: int
    substeps: int = 1
    extra: dict = field(default_factory=dict)


_QUANTITIES = ("re_E", "im_E", "re_C", "im_C", "abs2_E", "abs2_C", "re_H", "im_H")


def thread_count(requested: int | None = None) -> int:
    """Worker threads, capped by the SPS_SIM_THREADS environment variable."""
    n = requested or os.cpu_count() or 1
    cap = os.environ.get(THREADS_ENV)
    if cap:
        try:
            cap_n = int(cap)
        except ValueError as exc:
            raise ValueError(f"{THREADS_ENV} must be a positive integer, got {cap!r}") from exc
        if cap_n < 1:
            raise ValueError(f"{THREADS_ENV} must be a positive integer, got {cap!r}")
        n = min(n, cap_n)
    return max(1, n)


def default_substeps(params: SystemParams, output_step: float) -> int:
    """Fewest substeps per output interval that meet both resolution limits."""
    limit = MAX_COUPLING_STEP / params.g0
    if params.gamma_p > 0:
        limit = min(limit, MAX_PHASE_STEP**2 / (2 * params.gamma_p))
    return max(1, math.ceil(output_step / limit * (1 - 1e-12)))


def _run_chunk(params, indices, n_out, substeps, dt, seed, p11, p12, p22):
    n = len(indices)
    n_steps = (n_out - 1) * substeps
    scale = math.sqrt(2 * params.gamma_p * dt)
    if params.gamma_p > 0:
        noise = np.stack([_stream(seed, i).standard_normal(n_steps) for i in indices]) * scale
    else:
        noise = None
    e = np.ones(n, dtype=complex)
    c = np.zeros(n, dtype=complex)
    phi = np.zeros(n)
    sums = np.zeros((len(_QUANTITIES), n_out))
    sq = np.zeros_like(sums)

    def record(k):
        h = e * np.conj(c)
        vals = (e.real, e.imag, c.real, c.imag, np.abs(e) ** 2, np.abs(c) ** 2, h.real, h.imag)
        for q, v in enumerate(vals):
            sums[q, k] = v.sum()
            sq[q, k] = (v * v).sum()

    record(0)
    step = 0
    for k in range(1, n_out):
        for _ in range(substeps):
            if noise is not None:
                ph = np.exp(1j * phi)
                e, c = p11 * e + p12 * ph * c, p12 * np.conj(ph) * e + p22 * c
                phi = phi + noise[:, step]
            else:
                e, c = p11 * e + p12 * c, p12 * e + p22 * c
            step += 1
        record(k)
    return sums, sq


def monte_carlo_moments(params: SystemParams, grid, n_traj: int, seed: int,
                        substeps: int | None = None, threads: int | None = None,
                        chunk_size: int = 500) -> MonteCarloEstimate:
    """Average (E, C) over sampled phase paths for E(0)=1, C(0)=0.

    Each output interval is split into ``substeps`` equal steps. Within a
    step the phase is frozen at its left-endpoint value and the amplitudes
    advance with the exact constant-coefficient propagator. Trajectory i
    draws its noise from its own stream keyed by (seed, i), and chunk sums
    are combined in a fixed order, so results do not depend on ``threads``.
    """
    if params.delta != 0:
        raise ValueError("Monte Carlo moments are implemented on resonance (delta = 0)")
    if n_traj < 2:
        raise ValueError("need at least two trajectories for standard errors")
    grid, out_dt = _check_uniform(grid)
    if grid[0] != 0:
        raise ValueError("grid must start at 0")
    if substeps is None:
        substeps = default_substeps(params, out_dt)
    if substeps < 1:
        raise ValueError("substeps must be positive")
    dt = out_dt / substeps
    if params.g0 * dt > MAX_COUPLING_STEP * (1 + 1e-9):
        raise ValueError(f"step too coarse: g0*dt = {params.g0 * dt:.3g} > {MAX_COUPLING_STEP}")
    if math.sqrt(2 * params.gamma_p * dt) > MAX_PHASE_STEP * (1 + 1e-9):
        raise ValueError(
            f"step too coarse: sqrt(2*gamma_p*dt) = {math.sqrt(2 * params.gamma_p * dt):.3g} "
            f"> {MAX_PHASE_STEP}")

    from .coherent import propagator  # local: keeps the oracle's dependency surface explicit
    u = propagator(params, dt)
    p11, p12, p22 = u[0, 0], u[0, 1], u[1, 1]

    chunks = [range(s, min(s + chunk_size, n_traj)) for s in range(0, n_traj, chunk_size)]
    work = lambda idx: _run_chunk(params, idx, grid.size, substeps, dt, seed, p11, p12, p22)  # noqa: E731
    n_workers = min(thread_count(threads), len(chunks))
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(work, chunks))
    else:
        results = [work(idx) for idx in chunks]

    sums = sum(r[0] for r in results)
    sq = sum(r[1] for r in results)
    mean = sums / n_traj
    var = np.maximum(sq - n_traj * mean**2, 0.0) / (n_traj - 1)
    err = np.sqrt(var / n_traj)
    m = dict(zip(_QUANTITIES, mean))
    stderr = dict(zip(_QUANTITIES, err))
    means = {
        "E": m["re_E"] + 1j * m["im_E"],
        "C": m["re_C"] + 1j * m["im_C"],
        "H": m["re_H"] + 1j * m["im_H"],
        "abs2_E": m["abs2_E"],
        "abs2_C": m["abs2_C"],
    }
    return MonteCarloEstimate(grid, means, stderr, n_traj, seed, substeps)


# -- spectra from kernels ---------------------------------------------------

def spectrum_from_kernel(kernel: CorrelationKernel, rate: float, grid: FrequencyGrid,
                         channel: str, block: int = 256) -> Spectrum:
    """S(W) = (rate/pi) Re int dtau e^{i W tau} int dt' kernel(t', tau).

    Nested trapezoidal quadrature; the t' integral is done once per tau.
    Warns when either truncated tail is estimated above 1e-3.
    """
    if channel not in ("side", "forward"):
        raise ValueError(f"unknown channel {channel!r}")
    k = kernel.e_kernel if channel == "side" else kernel.c_kernel
    t, tau = kernel.t_grid, kernel.tau_grid
    tau_tail = math.exp(-kernel.decay_rate * tau[-1]) if kernel.decay_rate > 0 else 1.0
    diag = np.abs(k[:, 0])
    t_tail = diag[-1] / diag.max() if diag.max() > 0 else 0.0
    if max(tau_tail, t_tail) > TAIL_TOL:
        warnings.warn(
            f"kernel grids truncate the integrand early (tau tail {tau_tail:.2g}, "
            f"t' tail {t_tail:.2g})",
            stacklevel=2,
        )
    inner = trapezoid(k, t, axis=0)
    w = grid.values
    out = np.empty(w.size)
    for s in range(0, w.size, block):
        ph = np.exp(1j * np.outer(w[s:s + block], tau))
        out[s:s + block] = np.real(trapezoid(ph * inner[None, :], tau, axis=1))
    return Spectrum(grid, rate / math.pi * out, channel, dephased=True, normalized=False)


def kernel_channel_probability(kernel: CorrelationKernel, rate: float, channel: str) -> float:
    """rate * integral over t' of the tau = 0 slice (the channel's emitted probability)."""
    k = kernel.e_kernel if channel == "side" else kernel.c_kernel
    return float(rate * trapezoid(k[:, 0].real, kernel.t_grid))
