"""Figure rendering for experiment curves and Doppler grids.

Everything draws to files through the Agg backend, so the functions work
headless; the CSV output remains the canonical record and these plots
are a convenience view of the same numbers.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["save_curves", "save_acquisition", "save_doppler"]


def save_curves(points, path, title: str | None = None) -> None:
    """Plot simulated and analytic probability curves against SNR.

    Simulated detection and max-position rates get binomial error bars;
    analytic curves are drawn as lines; two-tap tallies appear when
    present.  The file format follows the path suffix.
    """
    points = list(points)
    if not points:
        raise ValueError("no curve points to plot")
    snr = np.array([p.snr_db for p in points])
    fig, ax = plt.subplots(figsize=(7.0, 5.0))
    ax.errorbar(
        snr,
        [p.p_d_sim for p in points],
        yerr=[p.p_d_err for p in points],
        fmt="o",
        capsize=3,
        label="P_D simulated",
    )
    ax.errorbar(
        snr,
        [p.p_m_sim for p in points],
        yerr=[p.p_m_err for p in points],
        fmt="s",
        capsize=3,
        label="P_m simulated",
    )
    ax.plot(snr, [p.p_d_theory for p in points], "-", label="P_D analytic")
    ax.plot(snr, [p.p_m_theory for p in points], "--", label="P_m analytic")
    if points[0].p_d2_sim is not None:
        ax.plot(snr, [p.p_d2_sim for p in points], "^:", label="P_D2 simulated")
        ax.plot(snr, [p.p_m2_sim for p in points], "v:", label="P_m2 simulated")
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("probability")
    ax.set_ylim(-0.02, 1.02)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_acquisition(decisions, path, title: str | None = None) -> None:
    """Plot the per-lag detection statistic against its threshold.

    Expects the decision list from a serial search; the lag flagged as
    the maximum is highlighted.
    """
    decisions = list(decisions)
    if not decisions:
        raise ValueError("no decisions to plot")
    lags = np.array([d.lag for d in decisions])
    stats = np.array([d.statistic for d in decisions])
    thresholds = np.array([d.threshold_value for d in decisions])
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    ax.plot(lags, stats, label="|r|^2")
    ax.plot(lags, thresholds, "--", label="threshold")
    for d in decisions:
        if d.is_max:
            ax.plot([d.lag], [d.statistic], "r*", markersize=12, label="maximum")
            break
    ax.set_xlabel("lag (samples)")
    ax.set_ylabel("statistic")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_doppler(grid, path, title: str | None = None) -> None:
    """Render a lag-by-frequency energy grid as an image."""
    g = np.asarray(grid, dtype=np.float64)
    if g.ndim != 2:
        raise ValueError("doppler grid must be two-dimensional")
    fig, ax = plt.subplots(figsize=(7.0, 5.0))
    im = ax.imshow(g.T, origin="lower", aspect="auto", interpolation="nearest")
    ax.set_xlabel("lag (samples)")
    ax.set_ylabel("frequency bin")
    fig.colorbar(im, ax=ax, label="energy")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
