import math
import struct

import numpy as np
import pytest

from sqnz.dispersion import dispersion_closed_form
from sqnz.errors import ConfigError
from sqnz.kernels import (
    BandConfig,
    band_moment3_cos,
    noise_kernel,
    oscillator_from_gamma_ratio,
    response_kernel_dot,
    squeeze_derive,
)
from sqnz.montecarlo import (
    DUMP_MAGIC,
    DUMP_VERSION,
    EnsembleResult,
    NoiseRealization,
    _draw_alpha,
    _mode_grid,
    ensemble_dispersion,
    read_noise_dump,
    simulate_velocity,
    synthesize_noise,
    write_noise_dump,
)

OSC = oscillator_from_gamma_ratio(0.02)


def make_band(r=1.0, theta=0.8, delta=0.075):
    return BandConfig(Xi=1.0, Delta=delta, A=1.0, squeeze=squeeze_derive(r, theta))


def full_kernel(t1, t2, band):
    """Unsubtracted band kernel: delta parts plus the band-vacuum share."""
    st, ns = noise_kernel(t1, t2, band)
    vac = 0.5 * band.A * band_moment3_cos(t1 - t2, band.lo, band.hi)
    return st + ns + vac


def sample_xi_at(band, times, n_samples, seed, n_modes=128):
    """xi evaluated at a handful of times across many seeded realizations."""
    omega, weights = _mode_grid(band, n_modes)
    phases = weights[:, None] * np.exp(-1j * np.outer(omega, times))
    out = np.empty((len(times), n_samples))
    for i in range(n_samples):
        alpha = _draw_alpha(band, n_modes, seed, i)
        out[:, i] = (alpha @ phases).real
    return out


# ---------------------------------------------------------------------------
# synthesis
# ---------------------------------------------------------------------------

def test_same_seed_bitwise_reproducible():
    band = make_band()
    a = synthesize_noise(band, duration=20.0, dt=0.2, n_modes=64, seed=99)
    b = synthesize_noise(band, duration=20.0, dt=0.2, n_modes=64, seed=99)
    c = synthesize_noise(band, duration=20.0, dt=0.2, n_modes=64, seed=100)
    assert np.array_equal(a.samples, b.samples)
    assert not np.array_equal(a.samples, c.samples)
    assert a.n_modes == 64 and a.seed == 99


def test_sampling_guards():
    band = make_band()
    with pytest.raises(ConfigError):
        synthesize_noise(band, 10.0, 0.2, n_modes=32, seed=0)
    with pytest.raises(ConfigError):
        synthesize_noise(band, 10.0, 2.0, n_modes=64, seed=0)  # Nyquist
    with pytest.raises(ConfigError):
        ensemble_dispersion(band, OSC, 10.0, 0.2, 64, n_samples=10, seed=0)


def test_noise_is_zero_mean():
    band = make_band()
    xi = sample_xi_at(band, np.array([0.0, 3.7, 11.0]), 4000, seed=5)
    mean = xi.mean(axis=1)
    stderr = xi.std(axis=1, ddof=1) / math.sqrt(xi.shape[1])
    assert np.all(np.abs(mean) <= 3.0 * stderr)


def test_second_moments_match_kernel(rng):
    band = make_band(r=0.9, theta=1.3)
    n = 10_000
    pairs = [(rng.uniform(0, 15), rng.uniform(0, 15)) for _ in range(10)]
    times = np.unique(np.array([v for p in pairs for v in p]))
    xi = sample_xi_at(band, times, n, seed=21)
    index = {t: k for k, t in enumerate(times)}
    for t1, t2 in pairs:
        prod = xi[index[t1]] * xi[index[t2]]
        emp = prod.mean()
        stderr = prod.std(ddof=1) / math.sqrt(n)
        assert abs(emp - full_kernel(t1, t2, band)) <= 3.0 * stderr


def test_vacuum_second_moments():
    band = make_band(r=0.0)
    n = 10_000
    times = np.array([0.0, 2.5, 9.0])
    xi = sample_xi_at(band, times, n, seed=8)
    for k, t in enumerate(times):
        prod = xi[k] * xi[k]
        stderr = prod.std(ddof=1) / math.sqrt(n)
        vac = 0.5 * band.A * band_moment3_cos(0.0, band.lo, band.hi)
        assert abs(prod.mean() - vac) <= 3.0 * stderr


def test_gaussianity_fourth_moment():
    band = make_band(r=1.1, theta=0.4)
    xi = sample_xi_at(band, np.array([4.2]), 10_000, seed=13)[0]
    m2 = np.mean(xi**2)
    m4 = np.mean(xi**4)
    stderr4 = np.std(xi**4, ddof=1) / math.sqrt(len(xi))
    assert abs(m4 - 3.0 * m2**2) <= 5.0 * stderr4


def test_mode_doubling_shrinks_discretization_error():
    # deterministic check: the discretized kernel converges at least ~2x per
    # doubling of n_modes (trapezoid is O(h^2)) until the float floor
    band = make_band(r=0.7, theta=0.9)
    sq = band.squeeze
    t1, t2 = 7.3, 2.1
    exact = full_kernel(t1, t2, band)

    def discretized(n_modes):
        omega, weights = _mode_grid(band, n_modes)
        w2 = weights**2
        st = 0.5 * (sq.mu**2 + sq.eta**2) * np.sum(w2 * np.cos(omega * (t1 - t2)))
        ns = sq.mu * sq.eta * np.sum(w2 * np.cos(omega * (t1 + t2) - sq.theta))
        return st + ns

    errs = [abs(discretized(n) - exact) for n in (64, 128, 256)]
    assert errs[1] <= errs[0] / 2.0
    assert errs[2] <= errs[1] / 2.0


# ---------------------------------------------------------------------------
# velocity response
# ---------------------------------------------------------------------------

def test_zero_noise_zero_velocity():
    noise = NoiseRealization(dt=0.1, samples=np.zeros(300), seed=0, n_modes=64)
    assert np.all(simulate_velocity(noise, OSC) == 0.0)


def test_impulse_reproduces_kernel():
    samples = np.zeros(400)
    samples[0] = 2.0
    noise = NoiseRealization(dt=0.1, samples=samples, seed=0, n_modes=64)
    v = simulate_velocity(noise, OSC)
    kdot = response_kernel_dot(noise.times, OSC)
    expected = (math.sqrt(OSC.charge2) / OSC.mass) * noise.dt * 0.5 * kdot * 2.0
    assert v[0] == 0.0
    assert np.allclose(v[1:], expected[1:], rtol=1e-12, atol=1e-15)


def test_velocity_bounded_by_young_inequality():
    band = make_band()
    noise = synthesize_noise(band, duration=40.0, dt=0.2, n_modes=64, seed=3)
    v = simulate_velocity(noise, OSC)
    kdot = response_kernel_dot(noise.times, OSC)
    bound = (
        (math.sqrt(OSC.charge2) / OSC.mass)
        * noise.dt
        * np.sum(np.abs(kdot))
        * np.max(np.abs(noise.samples))
    )
    assert np.max(np.abs(v)) <= bound * (1.0 + 1e-12)


# ---------------------------------------------------------------------------
# ensemble estimator
# ---------------------------------------------------------------------------

def test_ensemble_thread_count_invariance():
    band = make_band()
    kw = dict(duration=30.0, dt=0.2, n_modes=64, n_samples=200, seed=17, n_output=10)
    r1 = ensemble_dispersion(band, OSC, **kw, threads=1)
    r3 = ensemble_dispersion(band, OSC, **kw, threads=3)
    assert np.array_equal(r1.mean_v2, r3.mean_v2)
    assert np.array_equal(r1.stderr, r3.stderr)
    assert np.array_equal(r1.vac_expected, r3.vac_expected)
    assert np.all(r1.stderr > 0.0) and np.all(r1.mean_v2 >= 0.0)


def test_stderr_scales_like_clt():
    band = make_band()
    kw = dict(duration=30.0, dt=0.2, n_modes=64, seed=29, n_output=8)
    small = ensemble_dispersion(band, OSC, n_samples=256, **kw)
    big = ensemble_dispersion(band, OSC, n_samples=1024, **kw)
    ratio = np.mean(big.stderr / small.stderr)
    assert abs(ratio - 0.5) <= 0.1


def test_vacuum_band_delta_consistent_with_zero():
    band = make_band(r=0.0)
    res = ensemble_dispersion(
        band, OSC, duration=30.0, dt=0.2, n_modes=64, n_samples=2000, seed=31, n_output=8
    )
    assert np.all(np.abs(res.delta) <= 3.0 * res.stderr)


def test_ensemble_tracks_deterministic_delta():
    band = make_band(r=1.0, theta=0.8)
    res = ensemble_dispersion(
        band, OSC, duration=100.0, dt=0.1, n_modes=128, n_samples=2000, seed=37, n_output=10
    )
    for k, t in enumerate(res.times):
        st, ns = dispersion_closed_form(float(t), band, OSC)
        assert abs(res.delta[k] - (st + ns)) <= 5.0 * res.stderr[k]


# ---------------------------------------------------------------------------
# raw dump
# ---------------------------------------------------------------------------

def test_dump_round_trip(tmp_path):
    band = make_band()
    noise = synthesize_noise(band, duration=12.0, dt=0.25, n_modes=64, seed=12345)
    path = tmp_path / "noise.sqnz"
    write_noise_dump(path, noise)
    raw = path.read_bytes()
    magic, version, dt, length, seed = struct.unpack("<4sIdQQ", raw[:32])
    assert magic == DUMP_MAGIC and version == DUMP_VERSION
    assert dt == noise.dt and length == len(noise.samples) and seed == 12345
    samples, dt2, seed2 = read_noise_dump(path)
    assert dt2 == noise.dt and seed2 == 12345
    assert np.array_equal(samples, noise.samples)


def test_dump_rejects_garbage(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"NOPE" + b"\x00" * 28)
    with pytest.raises(ValueError):
        read_noise_dump(path)


def test_ensemble_result_invariants():
    with pytest.raises(ValueError):
        EnsembleResult(
            times=np.array([1.0]),
            mean_v2=np.array([-0.1]),
            stderr=np.array([0.1]),
            n_samples=10,
            vac_expected=np.array([0.0]),
        )
