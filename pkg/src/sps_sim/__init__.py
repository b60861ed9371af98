"""Single-emitter cavity QED with phase-diffusion dephasing.

Closed-form dynamics, spectra and quantum efficiency of a two-level emitter
in a leaky single-mode cavity, plus independent numerical oracles.
"""
from .coherent import AmplitudePair, ProbabilityTrace, amplitudes, probabilities, propagator, quantum_efficiency
from .dephasing import (
    OneTimeMoments,
    SecularProblem,
    dephased_probabilities,
    mean_amplitudes_dephased,
    moments_closed_form,
    qe_dephased,
    secular_problem,
    secular_roots_approx,
)
from .params import GHZ, REFERENCE_PARAMS, DerivedRates, SystemParams, derive_rates, validate_regime
from .spectra import (
    CorrelationKernel,
    FrequencyGrid,
    Spectrum,
    coherent_spectrum,
    correlation_kernel,
    dephased_spectrum,
    normal_mode_splittings,
    normalize_spectrum,
)

__version__ = "0.1.0"
