"""Physical parameters of the emitter-cavity system and the rates derived from them.

All rates are angular frequencies in rad/s. The ``*_ghz`` helpers use the
rate/2pi convention of the figure captions, so ``g0_ghz=8.0`` means
``g0 = 2*pi*8e9 rad/s``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

GHZ = 2.0 * math.pi * 1e9
"""rad/s per GHz in the rate/2pi convention."""

REAL_TOL = 1e-12


@dataclass(frozen=True)
class SystemParams:
    """The five rates that define a system.

    Parameters
    ----------
    g0 : float
        Emitter-cavity coupling rate.
    kappa : float
        Half the intracavity field decay rate.
    gamma : float
        Half the atomic population decay rate into side modes.
    gamma_p : float
        Phase-diffusion coefficient; the pure dephasing rate is ``2*gamma_p``.
    delta : float
        Atom-cavity detuning ``omega_0 - omega_c``.
    """

    g0: float
    kappa: float
    gamma: float
    gamma_p: float = 0.0
    delta: float = 0.0

    def __post_init__(self):
        for name in ("g0", "kappa", "gamma", "gamma_p", "delta"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.g0 <= 0:
            raise ValueError(f"g0 must be positive, got {self.g0}")
        for name in ("kappa", "gamma", "gamma_p"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative, got {getattr(self, name)}")

    @classmethod
    def from_ghz(cls, g0, kappa, gamma, gamma_p=0.0, delta_over_g0=0.0):
        """Build from rate/2pi values in GHz; detuning is given as delta/g0."""
        return cls(
            g0=g0 * GHZ,
            kappa=kappa * GHZ,
            gamma=gamma * GHZ,
            gamma_p=gamma_p * GHZ,
            delta=delta_over_g0 * g0 * GHZ,
        )

    def with_(self, **changes) -> "SystemParams":
        return replace(self, **changes)

    def to_ghz(self) -> dict:
        return {
            "g0_ghz": self.g0 / GHZ,
            "kappa_ghz": self.kappa / GHZ,
            "gamma_ghz": self.gamma / GHZ,
            "gamma_p_ghz": self.gamma_p / GHZ,
            "delta_over_g0": self.delta / self.g0,
        }


REFERENCE_PARAMS = SystemParams.from_ghz(8.0, 1.6, 0.32)
"""(g0, kappa, gamma)/2pi = (8.0, 1.6, 0.32) GHz, resonant, no dephasing."""

CONFIG_KEYS = ("g0_ghz", "kappa_ghz", "gamma_ghz", "gamma_p_ghz", "delta_over_g0")


def params_from_config(config: dict) -> SystemParams:
    """Read parameters from a mapping with the JSON configuration keys.

    Missing ``gamma_p_ghz`` and ``delta_over_g0`` default to zero; unknown keys
    are rejected so typos do not silently fall back to defaults.
    """
    unknown = set(config) - set(CONFIG_KEYS)
    if unknown:
        raise ValueError(f"unknown parameter keys: {sorted(unknown)}")
    missing = {"g0_ghz", "kappa_ghz", "gamma_ghz"} - set(config)
    if missing:
        raise ValueError(f"missing parameter keys: {sorted(missing)}")
    return SystemParams.from_ghz(
        float(config["g0_ghz"]),
        float(config["kappa_ghz"]),
        float(config["gamma_ghz"]),
        float(config.get("gamma_p_ghz", 0.0)),
        float(config.get("delta_over_g0", 0.0)),
    )


def load_params(path) -> SystemParams:
    return params_from_config(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class DerivedRates:
    """Combinations of the rates that appear throughout the closed forms.

    ``lam``, ``g``, ``g1`` and ``g2`` are complex (principal square root) so
    that parameter sets outside strong coupling still evaluate; use
    :func:`as_real` where a real frequency is required.
    """

    K: float
    Gamma: float
    lam: complex
    g: complex
    g1: complex
    g2: complex
    epsilon: float


def derive_rates(params: SystemParams) -> DerivedRates:
    g0, kappa, gamma, gp, delta = (
        params.g0, params.kappa, params.gamma, params.gamma_p, params.delta,
    )
    K = kappa + gamma
    Gamma = kappa - gamma
    lam = np.sqrt(complex(g0**2 - ((Gamma - 1j * delta) / 2) ** 2))
    g_sq = g0**2 + (delta / 2) ** 2 - (Gamma / 2) ** 2
    g = np.sqrt(complex(g_sq))
    g1 = np.sqrt(complex(g0**2 - (Gamma + gp) ** 2 / 4))
    g2 = np.sqrt(complex(g0**2 - (Gamma - gp) ** 2 / 4))
    epsilon = Gamma**2 / (4 * g_sq) if g_sq != 0 else math.inf
    return DerivedRates(
        K=K, Gamma=Gamma, lam=complex(lam), g=complex(g),
        g1=complex(g1), g2=complex(g2), epsilon=epsilon,
    )


def as_real(value: complex, name: str = "frequency") -> float:
    """Return the real part of ``value``, insisting the imaginary part is negligible."""
    value = complex(value)
    if abs(value.imag) > REAL_TOL * abs(value):
        raise ValueError(
            f"{name} is not real ({value}); parameters are outside the regime "
            "where this closed form applies"
        )
    return value.real


@dataclass(frozen=True)
class RegimeCheck:
    name: str
    ratio: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.ratio >= self.threshold


@dataclass(frozen=True)
class RegimeReport:
    checks: tuple[RegimeCheck, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [dict(asdict(c), passed=c.passed) for c in self.checks],
        }


def _ratio(numerator: float, denominator: float) -> float:
    if denominator == 0:
        return math.inf if numerator > 0 else (0.0 if numerator == 0 else -math.inf)
    return numerator / denominator


def validate_regime(params: SystemParams, ratio_threshold: float = 10.0) -> RegimeReport:
    """Report how deep into strong coupling a parameter set sits.

    Advisory only: nothing downstream refuses to compute when a check fails.
    All three compare squared rates. The checks are
    ``g0**2 >= thr*max(kappa, gamma)**2``,
    ``4*g0**2 - Gamma**2 >= thr*Gamma**2`` and
    ``4*g0**2 - Gamma**2 >= thr*gamma_p**2``.
    """
    if not ratio_threshold > 1:
        raise ValueError("ratio_threshold must exceed 1")
    Gamma = params.kappa - params.gamma
    gap = 4 * params.g0**2 - Gamma**2
    return RegimeReport(checks=(
        RegimeCheck("coupling", _ratio(params.g0**2, max(params.kappa, params.gamma) ** 2),
                    ratio_threshold),
        RegimeCheck("decay_ratio", _ratio(gap, Gamma**2), ratio_threshold),
        RegimeCheck("dephasing_ratio", _ratio(gap, params.gamma_p**2), ratio_threshold),
    ))
