"""Stochastic channels for acquisition Monte Carlo.

Each trial places the unit-energy preamble at a random lag inside a
2N-sample observation window, scales it by the drawn tap amplitude(s),
and adds circular complex white noise.  SNR is defined per preamble
sequence: with E|a|^2 = 1 the noise variance is 10^(-snr_db/10), so the
linear SNR mu (or its mean for fading) equals 10^(snr_db/10).

Per-trial seeding is splittable: (base_seed, trial_index) fully
determines the realization, independent of execution order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .signals import SampleStream, as_samples

__all__ = [
    "ChannelSpec",
    "TrialSeed",
    "CHANNEL_KINDS",
    "noise_variance",
    "apply_channel",
]

CHANNEL_KINDS = ("awgn", "rayleigh_flat", "rayleigh_2tap", "rician")


@dataclass(frozen=True)
class ChannelSpec:
    """Channel kind plus its parameters.

    kappa is the Rician ratio of constant to random component power and
    is required exactly when kind is "rician".  For the two-tap channel
    both taps have equal mean power and snr_db applies per path;
    tap_separation is the second tap's delay in chips.
    """

    kind: str
    snr_db: float = 0.0
    kappa: float | None = None
    tap_separation: int = 1

    def __post_init__(self) -> None:
        if self.kind not in CHANNEL_KINDS:
            raise ValueError(f"unknown channel kind {self.kind!r}, have {CHANNEL_KINDS}")
        if self.kind == "rician":
            if self.kappa is None or self.kappa <= 0:
                raise ValueError("rician channel requires a positive kappa")
        elif self.kappa is not None:
            raise ValueError("kappa is only meaningful for the rician channel")
        if self.kind == "rayleigh_2tap" and self.tap_separation < 1:
            raise ValueError("tap_separation must be at least 1 chip")

    @property
    def n_taps(self) -> int:
        return 2 if self.kind == "rayleigh_2tap" else 1


@dataclass(frozen=True)
class TrialSeed:
    """Splittable per-trial seed: identical pairs give identical draws."""

    base_seed: int
    trial_index: int

    def rng(self) -> np.random.Generator:
        return np.random.default_rng([self.base_seed, self.trial_index])


def noise_variance(spec: ChannelSpec) -> float:
    """Total complex noise variance per sample for the configured SNR."""
    return 10.0 ** (-spec.snr_db / 10.0)


def _draw_amplitudes(spec: ChannelSpec, rng: np.random.Generator) -> np.ndarray:
    if spec.kind == "awgn":
        return np.ones(1, dtype=np.complex128)
    if spec.kind in ("rayleigh_flat", "rayleigh_2tap"):
        n = spec.n_taps
        return (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2.0)
    # rician: unit total mean power split kappa : 1 between constant and random
    kappa = float(spec.kappa)
    const = math.sqrt(kappa / (kappa + 1.0))
    scatter_std = math.sqrt(1.0 / (2.0 * (kappa + 1.0)))
    g = (rng.standard_normal() + 1j * rng.standard_normal()) * scatter_std
    return np.array([const + g], dtype=np.complex128)


def apply_channel(spec: ChannelSpec, s, seed: TrialSeed) -> tuple[SampleStream, int, np.ndarray]:
    """One channel realization of the preamble.

    Returns the 2N-sample noisy stream, the true lag, and the drawn tap
    amplitude(s).  The lag is uniform over the N non-ambiguous cells
    (shrunk by the tap separation for the two-tap channel so both copies
    stay inside the window).  Draw order is fixed: amplitudes, lag, then
    noise.
    """
    sp = as_samples(s)
    rate = int(getattr(s, "rate", 1))
    n = sp.size
    if n == 0:
        raise ValueError("empty preamble")
    rng = seed.rng()
    amps = _draw_amplitudes(spec, rng)
    sep = spec.tap_separation * rate if spec.kind == "rayleigh_2tap" else 0
    high = n - sep
    if high < 1:
        raise ValueError("tap separation leaves no room for the preamble")
    lag = int(rng.integers(0, high))
    n_obs = 2 * n
    sigma2 = noise_variance(spec)
    if sigma2 > 0:
        scale = math.sqrt(sigma2 / 2.0)
        y = (rng.standard_normal(n_obs) + 1j * rng.standard_normal(n_obs)) * scale
    else:
        y = np.zeros(n_obs, dtype=np.complex128)
    y[lag:lag + n] += amps[0] * sp
    if sep:
        y[lag + sep:lag + sep + n] += amps[1] * sp
    return SampleStream(y, rate), lag, amps
