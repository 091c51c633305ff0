"""Squeeze-state algebra, band noise kernels, self-energy, and oscillator response.

Everything is expressed in natural units (hbar = c = 1, Lorentz-Heaviside
charge) and all frequencies are best given in units of the oscillator
resonance, i.e. Omega = 1.  The excited modes form a band of mean frequency
``Xi`` and width ``Delta``; modes inside the band share one set of squeeze
parameters, everything outside stays in the ordinary vacuum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import StrongCouplingError

__all__ = [
    "SqueezeParams",
    "OscillatorConfig",
    "BandConfig",
    "squeeze_derive",
    "resonance_params",
    "oscillator_from_gamma_ratio",
    "noise_kernel",
    "self_energy",
    "response_kernel_dot",
    "energy_density",
    "energy_density_time_minimum",
    "fdr_check",
    "band_moment3_cos",
    "band_moment3_cexp",
]

# Solid-angle factor of the full sphere: integrating (delta^ii - k_i^2/w^2)
# over all directions and dividing by (2 pi)^3 gives 1/(3 pi^2).
FULL_SPHERE_WEIGHT = 1.0 / (3.0 * math.pi**2)


@dataclass(frozen=True)
class SqueezeParams:
    """Squeeze magnitude/phase and the derived Bogoliubov coefficients.

    Attributes
    ----------
    r : float
        Squeeze magnitude, r >= 0.
    theta : float
        Squeeze phase in radians.
    mu : float
        cosh(r).
    eta : float
        sinh(r).
    nbar : float
        Mean photon number per mode, eta**2.
    """

    r: float
    theta: float
    mu: float
    eta: float
    nbar: float

    def __post_init__(self):
        if not (self.r >= 0.0):
            raise ValueError(f"squeeze magnitude r must be >= 0, got {self.r}")
        if not math.isfinite(self.theta):
            raise ValueError("squeeze phase theta must be finite")
        # hyperbolic identity, relative to the magnitude of the coefficients
        if abs(self.mu**2 - self.eta**2 - 1.0) > 1e-12 * self.mu**2:
            raise ValueError("inconsistent Bogoliubov coefficients: mu^2 - eta^2 != 1")
        if self.nbar != self.eta**2:
            raise ValueError("nbar must equal eta^2")


def squeeze_derive(r: float, theta: float) -> SqueezeParams:
    """Build SqueezeParams from magnitude and phase.

    mu = cosh r, eta = sinh r, nbar = eta^2.  Negative r is rejected.
    """
    if r < 0.0:
        raise ValueError(f"squeeze magnitude r must be >= 0, got {r}")
    mu = math.cosh(r)
    eta = math.sinh(r)
    return SqueezeParams(r=float(r), theta=float(theta), mu=mu, eta=eta, nbar=eta**2)


VACUUM = squeeze_derive(0.0, 0.0)


@dataclass(frozen=True)
class OscillatorConfig:
    """Charged oscillator with its derived resonance quadruple.

    ``Omega`` (resonance frequency), ``Gamma`` (radiation-reaction decay
    rate), ``Z`` (amplitude renormalization) and ``alpha`` (phase shift) all
    follow from the order-e^2 self-energy; see :func:`resonance_params`.
    ``small_alpha`` forces alpha = 0 so asymptotic formulas can be matched
    without the O(Gamma/Omega) phase.
    """

    mass: float
    charge2: float
    omega0: float
    Omega: float
    Gamma: float
    Z: float
    alpha: float
    small_alpha: bool = False

    def __post_init__(self):
        if self.mass <= 0.0:
            raise ValueError("mass must be positive")
        if self.charge2 < 0.0:
            raise ValueError("charge2 (e^2) must be >= 0")
        if self.omega0 <= 0.0:
            raise ValueError("bare frequency omega0 must be positive")
        if self.Gamma < 0.0:
            raise ValueError("Gamma must be >= 0")
        if self.Gamma > 0.1 * self.Omega:
            raise StrongCouplingError(
                f"Gamma/Omega = {self.Gamma / self.Omega:.4g} > 0.1: outside the "
                "weak-coupling regime"
            )


def resonance_params(
    mass: float, charge2: float, omega0: float, small_alpha: bool = False
) -> OscillatorConfig:
    """Complete an oscillator from its raw inputs.

    At order e^2 the self-energy has Re Sigma = 0, so Omega = omega0 and
    Z = 1.  The decay constant is Gamma = e^2 Omega^2 / (12 pi m) and the
    phase shift alpha = Z * d Im Sigma / d Omega^2 = e^2 Omega / (4 pi m).

    Raises
    ------
    StrongCouplingError
        If Gamma/Omega > 0.1.
    """
    if mass <= 0.0:
        raise ValueError("mass must be positive")
    if omega0 <= 0.0:
        raise ValueError("omega0 must be positive")
    if charge2 < 0.0:
        raise ValueError("charge2 (e^2) must be >= 0")
    Omega = omega0
    Z = 1.0
    Gamma = charge2 * Omega**2 / (12.0 * math.pi * mass)
    alpha = 0.0 if small_alpha else charge2 * Omega / (4.0 * math.pi * mass)
    return OscillatorConfig(
        mass=mass,
        charge2=charge2,
        omega0=omega0,
        Omega=Omega,
        Gamma=Gamma,
        Z=Z,
        alpha=alpha,
        small_alpha=small_alpha,
    )


def oscillator_from_gamma_ratio(
    gamma_ratio: float, omega0: float = 1.0, mass: float = 1.0, small_alpha: bool = False
) -> OscillatorConfig:
    """Oscillator with a prescribed Gamma/Omega; inverts Gamma = e^2 Omega^2/(12 pi m)."""
    charge2 = 12.0 * math.pi * mass * gamma_ratio / omega0
    return resonance_params(mass, charge2, omega0, small_alpha=small_alpha)


@dataclass(frozen=True)
class BandConfig:
    """Excited squeezed band: mean frequency Xi, width Delta, angular weight A."""

    Xi: float
    Delta: float
    A: float
    squeeze: SqueezeParams

    def __post_init__(self):
        if self.Xi <= 0.0:
            raise ValueError("band mean frequency Xi must be positive")
        if not (0.0 < self.Delta < 2.0 * self.Xi):
            raise ValueError(
                f"bandwidth must satisfy 0 < Delta < 2 Xi, got Delta={self.Delta}, Xi={self.Xi}"
            )
        if self.A <= 0.0:
            raise ValueError("angular weight A must be positive")

    @property
    def lo(self) -> float:
        return self.Xi - 0.5 * self.Delta

    @property
    def hi(self) -> float:
        return self.Xi + 0.5 * self.Delta

    def contains(self, omega: float) -> bool:
        return self.lo <= abs(omega) <= self.hi

    def with_squeeze(self, squeeze: SqueezeParams) -> "BandConfig":
        return replace(self, squeeze=squeeze)


# ---------------------------------------------------------------------------
# band moments of w^3 against cos / exp
# ---------------------------------------------------------------------------

_SERIES_CUTOFF = 1.0  # |s|*hi below which the Taylor series is used


def band_moment3_cexp(s: float, lo: float, hi: float) -> complex:
    """Integral of w^3 e^{i w s} dw over [lo, hi], stable for small |s|.

    For |s|*hi >= 1 the four-term integration-by-parts antiderivative is
    used; below that the alternating series avoids the 1/s^4 cancellation.
    """
    if lo < 0 or hi < lo:
        raise ValueError("need 0 <= lo <= hi")
    if abs(s) * hi < _SERIES_CUTOFF:
        # sum_k (i s)^k (hi^{k+4} - lo^{k+4}) / (k! (k+4))
        total = 0.0 + 0.0j
        term_base = 1.0 + 0.0j  # (i s)^k / k!
        for k in range(0, 60):
            term = term_base * (hi ** (k + 4) - lo ** (k + 4)) / (k + 4)
            total += term
            if abs(term) < 1e-18 * max(abs(total), hi**4):
                break
            term_base *= 1j * s / (k + 1)
        return total

    def antideriv(w):
        i_s = 1j * s
        return np.exp(1j * w * s) * (
            w**3 / i_s - 3.0 * w**2 / i_s**2 + 6.0 * w / i_s**3 - 6.0 / i_s**4
        )

    return antideriv(hi) - antideriv(lo)


def band_moment3_cos(tau: float, lo: float, hi: float) -> float:
    """Integral of w^3 cos(w tau) dw over [lo, hi]."""
    # cos is even; canonicalizing the sign keeps N(t,t') = N(t',t) exact
    return band_moment3_cexp(abs(tau), lo, hi).real


def noise_kernel(t: float, t2: float, band: BandConfig) -> tuple[float, float]:
    """Vacuum-subtracted force-force kernel of the squeezed band.

    Returns
    -------
    (stationary, nonstationary) : tuple of float
        stationary    = A eta^2    * int_band dw w^3 cos(w (t - t2))
        nonstationary = A mu eta   * int_band dw w^3 cos(w (t + t2) - theta)

    The nonstationary sign is the force-side convention: the two time
    derivatives acting on the field kernel flip the pair-correlation sign.
    """
    sq = band.squeeze
    st = band.A * sq.nbar * band_moment3_cos(t - t2, band.lo, band.hi)
    # int w^3 cos(w s - theta) dw = Re[e^{-i theta} int w^3 e^{i w s} dw]
    ns = band.A * sq.mu * sq.eta * (
        np.exp(-1j * sq.theta) * band_moment3_cexp(t + t2, band.lo, band.hi)
    ).real
    return st, ns


# ---------------------------------------------------------------------------
# self-energy and response kernel
# ---------------------------------------------------------------------------

def self_energy(omega: float, osc: OscillatorConfig) -> tuple[float, float]:
    """Order-e^2 self-energy at real frequency: (Re Sigma, Im Sigma).

    Re Sigma = 0 after mass renormalization;
    Im Sigma = (e^2 / 4 pi m) sgn(omega) (2 omega^3 / 3).
    """
    if not math.isfinite(omega):
        raise ValueError("omega must be finite")
    im = (
        osc.charge2
        / (4.0 * math.pi * osc.mass)
        * math.copysign(1.0, omega)
        * (2.0 * abs(omega) ** 3 / 3.0)
    )
    if omega == 0.0:
        im = 0.0
    return 0.0, im


def response_kernel_dot(tau, osc: OscillatorConfig):
    """Time derivative of the response kernel: Z e^{-Gamma tau} cos(Omega tau + alpha).

    ``tau`` may be a scalar or an array; negative lags are rejected
    (the kernel is causal).
    """
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0.0):
        raise ValueError("response kernel is causal: tau must be >= 0")
    alpha = 0.0 if osc.small_alpha else osc.alpha
    out = osc.Z * np.exp(-osc.Gamma * tau) * np.cos(osc.Omega * tau + alpha)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# single-mode energy density
# ---------------------------------------------------------------------------

def energy_density(
    x_phase: float, t, omega_bar: float, sq: SqueezeParams, volume: float
):
    """Renormalized energy density of one squeezed mode.

    rho(t) = (omega_bar / V) * eta * [eta + mu cos(2 omega_bar t - 2 x_phase - theta)]

    ``x_phase`` is the projection k.x of the observation point on the mode
    wavevector.  Vectorized over ``t``.
    """
    if omega_bar <= 0.0:
        raise ValueError("mode frequency omega_bar must be positive")
    if volume <= 0.0:
        raise ValueError("quantization volume must be positive")
    t = np.asarray(t, dtype=float)
    out = (omega_bar / volume) * sq.eta * (
        sq.eta + sq.mu * np.cos(2.0 * omega_bar * t - 2.0 * x_phase - sq.theta)
    )
    return float(out) if out.ndim == 0 else out


def energy_density_time_minimum(
    x_phase: float, omega_bar: float, sq: SqueezeParams, volume: float
) -> tuple[float, float]:
    """Sampled minimum of the energy density over one mode period.

    Coarse grid over one period 2 pi / omega_bar followed by a bounded
    Brent refinement.  Returns (t_min, rho_min).
    """
    period = 2.0 * math.pi / omega_bar
    ts = np.linspace(0.0, period, 4097)
    vals = energy_density(x_phase, ts, omega_bar, sq, volume)
    i = int(np.argmin(vals))
    lo = ts[max(i - 1, 0)]
    hi = ts[min(i + 1, len(ts) - 1)]
    res = minimize_scalar(
        lambda t: energy_density(x_phase, t, omega_bar, sq, volume),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-14 * period},
    )
    t_min = float(res.x)
    rho_min = float(res.fun)
    if rho_min > vals[i]:
        t_min, rho_min = float(ts[i]), float(vals[i])
    return t_min, rho_min


# ---------------------------------------------------------------------------
# fluctuation-dissipation check
# ---------------------------------------------------------------------------

def hadamard_stationary_density(omega: float, band: BandConfig) -> float:
    """Spectral density of the full stationary force kernel at ``omega``.

    pi A |w|^3 (mu^2 + eta^2)/2 inside the band, with the squeeze factor
    replaced by the vacuum value (mu, eta) = (1, 0) outside.
    """
    sq = band.squeeze if band.contains(omega) else VACUUM
    return math.pi * band.A * abs(omega) ** 3 * (sq.mu**2 + sq.eta**2) / 2.0


def imag_retarded_force(omega: float, band: BandConfig, osc: OscillatorConfig) -> float:
    """Im of the retarded force kernel at ``omega``, routed through the self-energy.

    The self-energy carries the full-sphere angular weight 1/(3 pi^2); the
    band's directional weight A replaces it.  State-independent.
    """
    if osc.charge2 <= 0.0:
        raise ValueError("fdr routing through the self-energy needs charge2 > 0")
    _, im = self_energy(abs(omega), osc)
    return (
        math.copysign(1.0, omega)
        * (osc.mass / osc.charge2)
        * im
        * (band.A / FULL_SPHERE_WEIGHT)
    )


def fdr_check(omega: float, band: BandConfig, osc: OscillatorConfig) -> float:
    """Ratio of the stationary noise spectral density to sgn(w) Im G_R.

    Equals 2 eta^2 + 1 for frequencies inside the squeezed band and exactly
    1 outside (pure vacuum).  The two sides are computed through independent
    routes (squeeze algebra vs. self-energy), so the returned ratio is a
    genuine numerical check of the fluctuation-dissipation relation.
    """
    if omega == 0.0:
        raise ValueError("fdr_check needs omega != 0")
    lhs = hadamard_stationary_density(omega, band)
    rhs = math.copysign(1.0, omega) * imag_retarded_force(omega, band, osc)
    return lhs / rhs
