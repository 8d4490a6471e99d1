"""CFAR detection on matched-filter outputs.

The test compares |r(n)|^2 against gamma * (norm_factor * ||s||)^2 * ||y||^2
per lag (serial search); maximum search picks the largest statistic.  The
normalization factor absorbs the M/R output replication of aligned
overlapped filtering and, optionally, the analysis/reference window
energy ratio, keeping the false-alarm rate level-independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .signals import Window

__all__ = [
    "DetectorConfig",
    "Decision",
    "gamma_from_pfa",
    "detect",
    "max_search",
]


def gamma_from_pfa(target_pfa: float, N: int) -> float:
    """Threshold parameter giving the requested false-alarm rate.

    Inverts P_FA = exp(-gamma * N) for a length-N unit-energy reference,
    so gamma = -ln(P_FA) / N.
    """
    if not 0.0 < target_pfa < 1.0:
        raise ValueError("target_pfa must lie strictly between 0 and 1")
    if N < 1:
        raise ValueError("N must be at least 1")
    return -math.log(target_pfa) / N


@dataclass(frozen=True)
class DetectorConfig:
    """Threshold parameters of the CFAR detector.

    `norm_factor` scales the unit reference norm in the threshold; it is
    (M/R) * ||w_a|| / ||w_r|| when the full window correction is applied,
    and 1 for rectangular windows at critical sampling.
    `threshold_multiplier` is the empirical calibration knob; gamma
    already includes it.
    """

    target_pfa: float
    N: int
    norm_factor: float = 1.0
    threshold_multiplier: float = 1.0

    def __post_init__(self) -> None:
        gamma_from_pfa(self.target_pfa, self.N)  # validates range
        if self.norm_factor <= 0:
            raise ValueError("norm_factor must be positive")
        if self.threshold_multiplier <= 0:
            raise ValueError("threshold_multiplier must be positive")

    @property
    def gamma(self) -> float:
        return gamma_from_pfa(self.target_pfa, self.N) * self.threshold_multiplier

    def threshold(self, y_energy) -> np.ndarray:
        """Threshold value(s) for measured input energy, ||s|| = 1."""
        return self.gamma * self.norm_factor**2 * np.asarray(y_energy, dtype=np.float64)

    @classmethod
    def from_windows(
        cls,
        target_pfa: float,
        N: int,
        M: int,
        R: int,
        analysis_window: Window | None = None,
        reference_window: Window | None = None,
        include_window_ratio: bool = True,
        threshold_multiplier: float = 1.0,
    ) -> "DetectorConfig":
        """Config with the overlap (and optionally window) normalization.

        With include_window_ratio the factor is (M/R) * ||w_a|| / ||w_r||;
        without it only the M/R replication is compensated, which is the
        plain threshold that empirical calibration then corrects.
        """
        norm = M / R
        if include_window_ratio:
            na = analysis_window.norm if analysis_window is not None else math.sqrt(M)
            nr = reference_window.norm if reference_window is not None else math.sqrt(M)
            norm *= na / nr
        return cls(target_pfa, N, norm, threshold_multiplier)


@dataclass(frozen=True)
class Decision:
    """Outcome of the threshold test at one lag."""

    lag: int
    statistic: float
    threshold_value: float
    detected: bool
    is_max: bool = False


def detect(mf_outputs, y_energy, cfg: DetectorConfig) -> list[Decision]:
    """Serial-search threshold test over matched-filter output lags.

    `y_energy` is the measured input energy ||y_k||^2, either one scalar
    for all lags or one value per lag (required after excision, where the
    surviving energy is what normalizes the threshold).  Zero energy is
    the degenerate all-zero input and yields no detections; negative
    values are rejected.
    """
    r = np.asarray(mf_outputs)
    stats = np.abs(r) ** 2
    energy = np.asarray(y_energy, dtype=np.float64)
    if np.any(energy < 0):
        raise ValueError("y_energy must be non-negative")
    thr = np.broadcast_to(cfg.threshold(energy), stats.shape)
    return [
        Decision(lag=i, statistic=float(s), threshold_value=float(t), detected=bool(s > t))
        for i, (s, t) in enumerate(zip(stats, thr))
    ]


def max_search(decisions: list[Decision]) -> Decision:
    """The decision with the largest statistic, earliest lag on ties."""
    if not decisions:
        raise ValueError("max_search needs at least one decision")
    best = max(decisions, key=lambda d: (d.statistic, -d.lag))
    return replace(best, is_max=True)
