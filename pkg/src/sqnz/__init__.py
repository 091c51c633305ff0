"""Velocity dispersion of a charged oscillator in a squeezed-vacuum band.

Deterministic routes (exact frequency-space closed form and a slow
quadrature oracle), leading-order regime formulas, and a seeded Monte
Carlo estimator, all cross-validating each other.
"""

from .kernels import (
    BandConfig,
    OscillatorConfig,
    SqueezeParams,
    energy_density,
    fdr_check,
    noise_kernel,
    oscillator_from_gamma_ratio,
    resonance_params,
    response_kernel_dot,
    self_energy,
    squeeze_derive,
)
from .dispersion import (
    DispersionSeries,
    QuadratureConfig,
    dispersion_closed_form,
    dispersion_quadrature,
    evaluate_series,
    find_min_R,
    plateau_scale,
    ratio_R,
    vacuum_reference,
)
from .asymptotics import Regime, RegimeEstimate, effective_temperature, regime_classify
from .montecarlo import (
    EnsembleResult,
    NoiseRealization,
    ensemble_dispersion,
    simulate_velocity,
    synthesize_noise,
)

__version__ = "0.1.0"
