"""Stochastic validation path: sampled band noise pushed through the response kernel.

A realization is a sum over discretized band modes,

    xi(t) = sum_j w_j Re[ alpha_j e^{-i omega_j t} ],   alpha_j = mu b_j + nu b_j*,

with b_j independent circular complex Gaussians (variance 1/2 per real
dimension) and w_j^2 = A omega_j^3 dw_j (trapezoidal band weights).  The
``+ nu b*`` pairing is the force-side convention: it reproduces the
nonstationary kernel with the sign of :func:`sqnz.kernels.noise_kernel`.
The ensemble second moment of xi then matches the *unsubtracted* band
kernel; the band's vacuum share is removed in expectation (computed
analytically on the same time/mode discretization), so the ensemble
estimator targets the vacuum-subtracted dispersion directly.

Per-sample randomness comes from counter-based Philox streams keyed by
(master seed, sample index): results are bit-identical for any thread
count or execution order.
"""

from __future__ import annotations

import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .kernels import BandConfig, OscillatorConfig, response_kernel_dot

__all__ = [
    "NoiseRealization",
    "EnsembleResult",
    "synthesize_noise",
    "simulate_velocity",
    "ensemble_dispersion",
    "write_noise_dump",
    "read_noise_dump",
    "DUMP_MAGIC",
    "DUMP_VERSION",
]

MIN_MODES = 64
MIN_SAMPLES = 100

DUMP_MAGIC = b"SQNZ"
DUMP_VERSION = 1
# little-endian: magic(4s) version(u32) dt(f64) length(u64) seed(u64) = 32 bytes
_DUMP_HEADER = struct.Struct("<4sIdQQ")


@dataclass
class NoiseRealization:
    """One sampled force trajectory on a uniform grid t_n = n dt."""

    dt: float
    samples: np.ndarray
    seed: int
    n_modes: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 1:
            raise ValueError("samples must be a 1-D array")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.samples)) * self.dt


@dataclass
class EnsembleResult:
    """Ensemble second moment of the velocity with its standard error.

    ``mean_v2`` is the raw (unsubtracted) ensemble average of v^2(t);
    ``vac_expected`` is the analytic vacuum share for the same time and
    mode discretization, so ``mean_v2 - vac_expected`` estimates the
    vacuum-subtracted dispersion change.
    """

    times: np.ndarray
    mean_v2: np.ndarray
    stderr: np.ndarray
    n_samples: int
    vac_expected: np.ndarray

    def __post_init__(self):
        n = len(self.times)
        if not (len(self.mean_v2) == len(self.stderr) == len(self.vac_expected) == n):
            raise ValueError("column lengths disagree")
        if self.n_samples >= 2 and np.any(self.stderr <= 0.0):
            raise ValueError("stderr must be positive for n_samples >= 2")
        if np.any(self.mean_v2 < 0.0):
            raise ValueError("mean of squares cannot be negative")

    @property
    def delta(self) -> np.ndarray:
        return self.mean_v2 - self.vac_expected


def _nyquist_dt(band: BandConfig) -> float:
    return math.pi / (2.0 * band.hi)


def _check_sampling(band: BandConfig, dt: float, n_modes: int):
    if n_modes < MIN_MODES:
        raise ConfigError(f"n_modes must be >= {MIN_MODES}, got {n_modes}")
    limit = _nyquist_dt(band)
    if not (0.0 < dt < limit):
        raise ConfigError(
            f"dt={dt:g} violates the band Nyquist limit dt < pi/(2 (Xi + Delta/2)) = {limit:g}"
        )


def _mode_grid(band: BandConfig, n_modes: int) -> tuple[np.ndarray, np.ndarray]:
    """Equispaced band modes and sqrt(A w^3 dw) amplitude weights (trapezoid)."""
    omega = np.linspace(band.lo, band.hi, n_modes)
    dw = np.full(n_modes, omega[1] - omega[0])
    dw[0] *= 0.5
    dw[-1] *= 0.5
    return omega, np.sqrt(band.A * omega**3 * dw)


def _sample_rng(seed: int, index: int) -> np.random.Generator:
    key = np.array([np.uint64(seed % 2**64), np.uint64(index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _draw_alpha(band: BandConfig, n_modes: int, seed: int, index: int) -> np.ndarray:
    """Squeezed mode amplitudes alpha_j = mu b_j + nu b_j* for one realization."""
    rng = _sample_rng(seed, index)
    xy = rng.standard_normal((2, n_modes))
    b = (xy[0] + 1j * xy[1]) * math.sqrt(0.5)
    sq = band.squeeze
    nu = sq.eta * np.exp(1j * sq.theta)
    return sq.mu * b + nu * np.conj(b)


def synthesize_noise(
    band: BandConfig, duration: float, dt: float, n_modes: int, seed: int
) -> NoiseRealization:
    """Sample one squeezed-band force realization on a uniform grid.

    Raises
    ------
    ConfigError
        For fewer than 64 modes or a grid violating the band Nyquist limit.
    """
    _check_sampling(band, dt, n_modes)
    if duration <= 0.0:
        raise ValueError("duration must be positive")
    n = int(round(duration / dt)) + 1
    t = np.arange(n) * dt
    omega, weights = _mode_grid(band, n_modes)
    alpha = _draw_alpha(band, n_modes, seed, 0)
    phases = np.exp(-1j * omega[:, None] * t[None, :])
    xi = np.einsum("j,jn->n", weights * alpha, phases, optimize=False).real
    return NoiseRealization(dt=dt, samples=xi, seed=seed, n_modes=n_modes)


def _causal_convolve(kdot: np.ndarray, xi: np.ndarray, dt: float) -> np.ndarray:
    """Trapezoidal causal convolution dt * sum_{m<=n} c_m kdot_{n-m} xi_m.

    ``xi`` may be (N,) or (N, B), real or complex; FFT-based with zero
    padding, endpoint-corrected to trapezoid weights.  Row 0 is exactly 0.
    """
    n = len(kdot)
    length = 1
    while length < 2 * n:
        length *= 2
    one_d = xi.ndim == 1
    cols = xi if not one_d else xi[:, None]
    if np.isrealobj(cols) and np.isrealobj(kdot):
        spec = np.fft.rfft(kdot, length)[:, None] * np.fft.rfft(cols, length, axis=0)
        full = np.fft.irfft(spec, length, axis=0)[:n]
    else:
        spec = np.fft.fft(kdot, length)[:, None] * np.fft.fft(cols, length, axis=0)
        full = np.fft.ifft(spec, axis=0)[:n]
    out = dt * (full - 0.5 * kdot[:, None] * cols[0][None, :] - 0.5 * kdot[0] * cols)
    out[0] = 0.0
    return out[:, 0] if one_d else out


def simulate_velocity(noise: NoiseRealization, osc: OscillatorConfig) -> np.ndarray:
    """Velocity response v(t) = (e/m) int_0^t K'(t-u) xi(u) du on the noise grid."""
    t = noise.times
    kdot = response_kernel_dot(t, osc)
    return (math.sqrt(osc.charge2) / osc.mass) * _causal_convolve(kdot, noise.samples, noise.dt)


def _vacuum_expectation(
    band: BandConfig,
    osc: OscillatorConfig,
    n_grid: int,
    dt: float,
    n_modes: int,
    out_idx: np.ndarray,
) -> np.ndarray:
    """Vacuum share of E[v^2] for the same discretization as the estimator.

    Per mode the vacuum pair correlation is (1/2) w_j^2 cos(w_j (t - t')),
    so E[v^2]_vac = (e/m)^2 sum_j (1/2) w_j^2 |D_j|^2 with D_j the discrete
    causal convolution of K' with e^{-i w_j t}.
    """
    t = np.arange(n_grid) * dt
    kdot = response_kernel_dot(t, osc)
    omega, weights = _mode_grid(band, n_modes)
    vac = np.zeros(len(out_idx))
    for j in range(n_modes):
        d = _causal_convolve(kdot, np.exp(-1j * omega[j] * t), dt)
        vac += 0.5 * weights[j] ** 2 * np.abs(d[out_idx]) ** 2
    return (osc.charge2 / osc.mass**2) * vac


def ensemble_dispersion(
    band: BandConfig,
    osc: OscillatorConfig,
    duration: float,
    dt: float,
    n_modes: int,
    n_samples: int,
    seed: int,
    n_output: int = 50,
    threads: int = 1,
    batch_size: int = 250,
) -> EnsembleResult:
    """Ensemble mean and stderr of v^2(t) over seeded independent realizations.

    Work is split into fixed batches of sample indices; partial sums are
    reduced in batch order, so the result is bit-identical for any
    ``threads`` value.
    """
    _check_sampling(band, dt, n_modes)
    if n_samples < MIN_SAMPLES:
        raise ConfigError(f"n_samples must be >= {MIN_SAMPLES}, got {n_samples}")
    if duration <= 0.0:
        raise ValueError("duration must be positive")
    n = int(round(duration / dt)) + 1
    t = np.arange(n) * dt
    stride = max(1, (n - 1) // n_output)
    out_idx = np.arange(stride, n, stride)
    kdot = response_kernel_dot(t, osc)
    omega, weights = _mode_grid(band, n_modes)
    phases = weights[:, None] * np.exp(-1j * omega[:, None] * t[None, :])
    e_over_m = math.sqrt(osc.charge2) / osc.mass

    def run_batch(start: int) -> tuple[np.ndarray, np.ndarray]:
        stop = min(start + batch_size, n_samples)
        alpha = np.empty((n_modes, stop - start), dtype=complex)
        for i in range(start, stop):
            alpha[:, i - start] = _draw_alpha(band, n_modes, seed, i)
        xi = np.einsum("jn,jb->nb", phases, alpha, optimize=False).real
        v = e_over_m * _causal_convolve(kdot, xi, dt)
        v2 = v[out_idx] ** 2
        return v2.sum(axis=1), (v2**2).sum(axis=1)

    starts = list(range(0, n_samples, batch_size))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(run_batch, starts))
    else:
        partials = [run_batch(s) for s in starts]

    s1 = np.zeros(len(out_idx))
    s2 = np.zeros(len(out_idx))
    for p1, p2 in partials:
        s1 += p1
        s2 += p2
    mean = s1 / n_samples
    var = np.maximum(s2 / n_samples - mean**2, 0.0) * n_samples / (n_samples - 1)
    stderr = np.sqrt(var / n_samples)
    vac = _vacuum_expectation(band, osc, n, dt, n_modes, out_idx)
    return EnsembleResult(
        times=t[out_idx],
        mean_v2=mean,
        stderr=stderr,
        n_samples=n_samples,
        vac_expected=vac,
    )


# ---------------------------------------------------------------------------
# raw realization dump
# ---------------------------------------------------------------------------

def write_noise_dump(path, noise: NoiseRealization):
    """Binary dump: 32-byte header (magic, version, dt, length, seed), then LE float64."""
    header = _DUMP_HEADER.pack(
        DUMP_MAGIC, DUMP_VERSION, noise.dt, len(noise.samples), noise.seed % 2**64
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(noise.samples, dtype="<f8").tobytes())


def read_noise_dump(path) -> tuple[np.ndarray, float, int]:
    """Read a dump written by :func:`write_noise_dump`; returns (samples, dt, seed)."""
    with open(path, "rb") as fh:
        raw = fh.read(_DUMP_HEADER.size)
        magic, version, dt, length, seed = _DUMP_HEADER.unpack(raw)
        if magic != DUMP_MAGIC:
            raise ValueError(f"not a noise dump: bad magic {magic!r}")
        if version != DUMP_VERSION:
            raise ValueError(f"unsupported dump version {version}")
        samples = np.frombuffer(fh.read(8 * length), dtype="<f8").copy()
    if len(samples) != length:
        raise ValueError("truncated noise dump")
    return samples, dt, seed
