"""Tests for channel models and per-trial seeding."""

import math

import numpy as np
import pytest

from blockacq import (
    ChannelSpec,
    TrialSeed,
    apply_channel,
    generate_gold_preamble,
    noise_variance,
)


PREAMBLE = generate_gold_preamble().normalized()


def test_channel_spec_validation():
    with pytest.raises(ValueError):
        ChannelSpec("underwater")
    with pytest.raises(ValueError):
        ChannelSpec("rician")  # kappa required
    with pytest.raises(ValueError):
        ChannelSpec("rician", kappa=-1.0)
    with pytest.raises(ValueError):
        ChannelSpec("awgn", kappa=2.0)  # kappa forbidden elsewhere
    with pytest.raises(ValueError):
        ChannelSpec("rayleigh_2tap", tap_separation=0)
    assert ChannelSpec("rayleigh_2tap").n_taps == 2
    assert ChannelSpec("awgn").n_taps == 1


def test_noise_variance_db():
    assert math.isclose(noise_variance(ChannelSpec("awgn", snr_db=10.0)), 0.1)
    assert math.isclose(noise_variance(ChannelSpec("awgn", snr_db=0.0)), 1.0)
    assert noise_variance(ChannelSpec("awgn", snr_db=math.inf)) == 0.0


def test_identical_seeds_reproduce_trials():
    spec = ChannelSpec("rayleigh_flat", snr_db=5.0)
    y1, lag1, a1 = apply_channel(spec, PREAMBLE, TrialSeed(3, 17))
    y2, lag2, a2 = apply_channel(spec, PREAMBLE, TrialSeed(3, 17))
    assert np.array_equal(y1.samples, y2.samples)
    assert lag1 == lag2
    assert np.array_equal(a1, a2)
    y3, lag3, _ = apply_channel(spec, PREAMBLE, TrialSeed(3, 18))
    assert not np.array_equal(y1.samples, y3.samples)


def test_noiseless_awgn_places_preamble_exactly():
    spec = ChannelSpec("awgn", snr_db=math.inf)
    y, lag, amps = apply_channel(spec, PREAMBLE, TrialSeed(0, 5))
    assert len(y) == 2 * PREAMBLE.size
    assert amps[0] == 1.0 + 0.0j
    np.testing.assert_array_equal(y.samples[lag:lag + 64], PREAMBLE)
    rest = np.delete(y.samples, np.arange(lag, lag + 64))
    np.testing.assert_array_equal(rest, 0.0)


def test_noiseless_two_tap_superposition():
    spec = ChannelSpec("rayleigh_2tap", snr_db=math.inf, tap_separation=3)
    y, lag, amps = apply_channel(spec, PREAMBLE, TrialSeed(1, 2))
    expected = np.zeros(128, dtype=np.complex128)
    expected[lag:lag + 64] += amps[0] * PREAMBLE
    expected[lag + 3:lag + 67] += amps[1] * PREAMBLE
    np.testing.assert_allclose(y.samples, expected, atol=1e-15)
    assert lag + 67 <= 128


def test_lags_cover_candidate_range():
    spec = ChannelSpec("rayleigh_flat", snr_db=0.0)
    lags = {apply_channel(spec, PREAMBLE, TrialSeed(7, t))[1] for t in range(800)}
    assert min(lags) == 0
    assert max(lags) == 63
    assert len(lags) == 64

    sep = ChannelSpec("rayleigh_2tap", snr_db=0.0, tap_separation=4)
    lags2 = {apply_channel(sep, PREAMBLE, TrialSeed(7, t))[1] for t in range(800)}
    assert max(lags2) == 59  # both taps stay inside the window


def test_rayleigh_amplitude_moments():
    spec = ChannelSpec("rayleigh_flat", snr_db=math.inf)
    amps = np.array([apply_channel(spec, PREAMBLE, TrialSeed(11, t))[2][0]
                     for t in range(4000)])
    # unit mean power, zero mean, independent quadratures
    assert abs(np.mean(np.abs(amps) ** 2) - 1.0) < 0.08
    assert abs(np.mean(amps)) < 0.05
    assert abs(np.mean(amps.real * amps.imag)) < 0.03


def test_rician_amplitude_moments():
    kappa = 4.0
    spec = ChannelSpec("rician", snr_db=math.inf, kappa=kappa)
    amps = np.array([apply_channel(spec, PREAMBLE, TrialSeed(13, t))[2][0]
                     for t in range(4000)])
    assert abs(np.mean(np.abs(amps) ** 2) - 1.0) < 0.05
    const = math.sqrt(kappa / (kappa + 1.0))
    assert abs(np.mean(amps) - const) < 0.02


def test_two_tap_amplitudes_uncorrelated():
    spec = ChannelSpec("rayleigh_2tap", snr_db=math.inf)
    amps = np.array([apply_channel(spec, PREAMBLE, TrialSeed(17, t))[2]
                     for t in range(4000)])
    assert amps.shape == (4000, 2)
    assert abs(np.mean(amps[:, 0] * np.conj(amps[:, 1]))) < 0.05
    assert abs(np.mean(np.abs(amps[:, 1]) ** 2) - 1.0) < 0.08


def test_noise_power_matches_configured_snr():
    spec = ChannelSpec("rayleigh_flat", snr_db=7.0)
    sigma2 = noise_variance(spec)
    total = 0.0
    count = 0
    for t in range(300):
        y, lag, _ = apply_channel(spec, PREAMBLE, TrialSeed(19, t))
        noise = np.delete(y.samples, np.arange(lag, lag + 64))
        total += float(np.sum(np.abs(noise) ** 2))
        count += noise.size
    assert abs(total / count - sigma2) / sigma2 < 0.05


def test_apply_rejects_degenerate_input():
    with pytest.raises(ValueError):
        apply_channel(ChannelSpec("awgn"), np.array([]), TrialSeed(0, 0))
    tight = ChannelSpec("rayleigh_2tap", tap_separation=64)
    with pytest.raises(ValueError):
        apply_channel(tight, PREAMBLE, TrialSeed(0, 0))
