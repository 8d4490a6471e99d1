"""Monte Carlo acquisition experiments with analytic reference curves.

One experiment sweeps an SNR grid, runs independent channel trials at
each point, pushes every received window through the block matched
filter, applies the energy threshold at the true lag, and tallies the
detection and max-position rates next to their closed-form predictions.
Companion routines measure noise-only false-alarm rates and calibrate the
threshold multiplier until the empirical rate hits the target.

Determinism: every trial draws from an rng seeded by (base_seed,
trial_index), so results are independent of evaluation order and batch
size.  The three entry points use disjoint trial-index ranges, which
keeps calibration noise independent of both the experiment trials and
any verification measurement.

The simulated detector uses the plain replication-compensated threshold
gamma * (M/R)^2 * N * sigma^2 built on the true noise level; this is the
uncalibrated setting whose false-alarm behaviour the calibration routine
then corrects.  Analytic columns always describe the ideal unit-norm
detector at the target false-alarm rate, so a threshold multiplier moves
only the simulated columns.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .acquisition import DetectorConfig, gamma_from_pfa
from .analytics import ConvergenceError, p_d, p_m_approx, p_m_exact
from .block_filter import BlockFilterPlan, complexity, filter_signal, plan_filter
from .channels import ChannelSpec, TrialSeed, apply_channel, noise_variance
from .signals import Window, generate_gold_preamble, make_window

__all__ = [
    "CalibrationError",
    "ExperimentSpec",
    "CurvePoint",
    "run_experiment",
    "measure_fa",
    "calibrate_threshold",
    "curves_to_csv",
    "complexity_to_csv",
    "spec_to_json",
    "spec_from_json",
    "CSV_HEADER",
]

# Preamble degree for each supported length (extended Gold sequences).
_DEGREE_FOR = {32: 5, 64: 6, 128: 7}

# Disjoint trial-index blocks per entry point; see the module docstring.
_FA_INDEX_OFFSET = 1 << 40
_CAL_INDEX_OFFSET = 1 << 41

CSV_HEADER = (
    "snr_db,p_d_sim,p_d_err,p_m_sim,p_m_err,"
    "p_d2_sim,p_m2_sim,p_d_theory,p_m_theory,trials"
)


class CalibrationError(RuntimeError):
    """Threshold calibration could not bracket the target rate."""


@dataclass(frozen=True)
class ExperimentSpec:
    """Full description of one Monte Carlo sweep.

    The preamble is the extended Gold sequence of length N, scaled to
    unit energy, so snr_db is the ratio of received preamble energy to
    the per-sample noise power (per path for the two-tap channel).  The
    channel's own snr_db field is ignored; the grid drives it.
    """

    channel: ChannelSpec
    M: int = 32
    R: int = 32
    N: int = 64
    analysis_window: str = "rectangular"
    reference_window: str = "rectangular"
    window_beta: float = 8.0
    snr_grid_db: tuple[float, ...] = tuple(float(s) for s in range(-5, 26, 2))
    trials: int = 1000
    target_pfa: float = 0.01
    base_seed: int = 0

    def __post_init__(self) -> None:
        if not isinstance(self.channel, ChannelSpec):
            raise TypeError("channel must be a ChannelSpec")
        if self.N not in _DEGREE_FOR:
            raise ValueError(f"N must be one of {sorted(_DEGREE_FOR)}")
        if self.M < 1 or self.N % self.M:
            raise ValueError("M must divide the preamble length N")
        k, rem = divmod(self.M, self.R)
        if self.R < 1 or rem or k & (k - 1):
            raise ValueError("M/R must be a power of two")
        grid = tuple(float(s) for s in self.snr_grid_db)
        if not grid:
            raise ValueError("snr_grid_db must not be empty")
        object.__setattr__(self, "snr_grid_db", grid)
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        gamma_from_pfa(self.target_pfa, self.N)  # validates the range
        if self.base_seed < 0:
            raise ValueError("base_seed must be non-negative")


@dataclass(frozen=True)
class CurvePoint:
    """Simulation tallies and analytic references at one SNR point.

    Simulated entries are event counts over `trials` with their binomial
    standard errors; the 2-tap entries are None outside the two-tap
    channel.  Theory entries may be nan where the closed form is not
    evaluable.
    """

    snr_db: float
    p_d_sim: float
    p_d_err: float
    p_m_sim: float
    p_m_err: float
    p_d2_sim: float | None
    p_m2_sim: float | None
    p_d_theory: float
    p_m_theory: float
    trials: int

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        for name in ("p_d_sim", "p_m_sim", "p_d2_sim", "p_m2_sim"):
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value!r}")


def _build(spec: ExperimentSpec) -> tuple[np.ndarray, BlockFilterPlan, Window]:
    preamble = generate_gold_preamble(degree=_DEGREE_FOR[spec.N]).normalized()
    w_a = make_window(spec.analysis_window, spec.M, spec.window_beta)
    w_r = make_window(spec.reference_window, spec.M, spec.window_beta)
    plan = plan_filter(preamble, w_r, spec.M, spec.R, mode="interleaved")
    return preamble, plan, w_a


def _detector(spec: ExperimentSpec, threshold_multiplier: float) -> DetectorConfig:
    return DetectorConfig.from_windows(
        spec.target_pfa,
        spec.N,
        spec.M,
        spec.R,
        include_window_ratio=False,
        threshold_multiplier=threshold_multiplier,
    )


def _candidate_stats(
    batch: np.ndarray, plan: BlockFilterPlan, w_a: Window, N: int
) -> np.ndarray:
    """Energy statistic at the N candidate lags of 2N-sample windows."""
    out = filter_signal(batch, plan, analysis_window=w_a)
    return np.abs(out[..., N - 1 : 2 * N - 1]) ** 2


def _theory(spec: ExperimentSpec, mu: float, pm_method: str) -> tuple[float, float]:
    """Analytic (p_d, p_m) for one grid point, nan where not evaluable."""
    if not math.isfinite(mu):
        return 1.0, 1.0
    gamma = gamma_from_pfa(spec.target_pfa, spec.N)
    kind = spec.channel.kind
    try:
        if kind == "rician":
            kappa = float(spec.channel.kappa)
            # analytics expects the line-of-sight part of the mean SNR
            mu_c = mu * kappa / (kappa + 1.0)
            pd = p_d("rician", mu_c, gamma, spec.N, kappa)
            if pm_method == "approximate":
                pm = p_m_approx("rician", mu_c, kappa)
            else:
                pm = p_m_exact("rician", mu_c, spec.N, kappa)
        else:
            akind = "awgn" if kind == "awgn" else "rayleigh"
            pd = p_d(akind, mu, gamma, spec.N)
            if pm_method == "approximate":
                pm = p_m_approx(akind, mu)
            else:
                pm = p_m_exact(akind, mu, spec.N)
    except ConvergenceError:
        return float("nan"), float("nan")
    return pd, pm


def run_experiment(
    spec: ExperimentSpec,
    threshold_multiplier: float = 1.0,
    pm_method: str = "exact",
) -> list[CurvePoint]:
    """Run the Monte Carlo sweep and return one CurvePoint per SNR.

    Per trial: draw a channel realization of the unit-energy preamble in
    a 2N window, matched-filter it, test the statistic at the true lag
    against the threshold (p_d), and check whether the global maximum
    sits at the true lag (p_m, earliest lag wins ties).  For the two-tap
    channel the same tallies accept either tap position (p_d2, p_m2).
    pm_method picks the analytic p_m column: the 2.33 sigma approximation
    or the extreme-value form.
    """
    if pm_method not in ("approximate", "exact"):
        raise ValueError(f"unknown pm_method {pm_method!r}")
    preamble, plan, w_a = _build(spec)
    cfg = _detector(spec, threshold_multiplier)
    two_tap = spec.channel.kind == "rayleigh_2tap"
    sep = spec.channel.tap_separation if two_tap else 0
    rows = np.arange(spec.trials)

    points = []
    for p_idx, snr_db in enumerate(spec.snr_grid_db):
        channel = replace(spec.channel, snr_db=snr_db)
        sigma2 = noise_variance(channel)
        thr = float(cfg.threshold(spec.N * sigma2))
        ys = np.empty((spec.trials, 2 * spec.N), dtype=np.complex128)
        lags = np.empty(spec.trials, dtype=np.intp)
        for t in range(spec.trials):
            seed = TrialSeed(spec.base_seed, p_idx * spec.trials + t)
            stream, lag, _ = apply_channel(channel, preamble, seed)
            ys[t] = stream.samples
            lags[t] = lag
        stats = _candidate_stats(ys, plan, w_a, spec.N)

        detected = stats[rows, lags] > thr
        peak = np.argmax(stats, axis=1)
        at_true = peak == lags
        if two_tap:
            second = lags + sep
            det2 = detected | (stats[rows, second] > thr)
            max2 = at_true | (peak == second)
            p_d2_sim: float | None = float(det2.mean())
            p_m2_sim: float | None = float(max2.mean())
        else:
            p_d2_sim = p_m2_sim = None

        p_d_sim = float(detected.mean())
        p_m_sim = float(at_true.mean())
        pd_theory, pm_theory = _theory(spec, 10.0 ** (snr_db / 10.0), pm_method)
        points.append(
            CurvePoint(
                snr_db=float(snr_db),
                p_d_sim=p_d_sim,
                p_d_err=_binomial_err(p_d_sim, spec.trials),
                p_m_sim=p_m_sim,
                p_m_err=_binomial_err(p_m_sim, spec.trials),
                p_d2_sim=p_d2_sim,
                p_m2_sim=p_m2_sim,
                p_d_theory=pd_theory,
                p_m_theory=pm_theory,
                trials=spec.trials,
            )
        )
    return points


def _binomial_err(p: float, trials: int) -> float:
    return math.sqrt(p * (1.0 - p) / trials)


def _noise_stats(
    spec: ExperimentSpec,
    plan: BlockFilterPlan,
    w_a: Window,
    n_trials: int,
    index_offset: int,
    chunk: int = 4096,
):
    """Yield candidate-lag statistics of unit-variance noise-only trials."""
    root = math.sqrt(0.5)
    for start in range(0, n_trials, chunk):
        count = min(chunk, n_trials - start)
        ys = np.empty((count, 2 * spec.N), dtype=np.complex128)
        for i in range(count):
            rng = TrialSeed(spec.base_seed, index_offset + start + i).rng()
            ys[i] = root * (
                rng.standard_normal(2 * spec.N) + 1j * rng.standard_normal(2 * spec.N)
            )
        yield _candidate_stats(ys, plan, w_a, spec.N)


def measure_fa(
    spec: ExperimentSpec,
    noise_trials: int,
    threshold_multiplier: float = 1.0,
) -> float:
    """Empirical false-alarm rate over all lags of noise-only trials.

    Counts threshold crossings over noise_trials * N candidate lags with
    no signal injected; the configured snr grid plays no role.
    """
    if noise_trials < 1:
        raise ValueError("noise_trials must be at least 1")
    _, plan, w_a = _build(spec)
    cfg = _detector(spec, threshold_multiplier)
    thr = float(cfg.threshold(spec.N * 1.0))
    hits = 0
    total = 0
    for stats in _noise_stats(spec, plan, w_a, noise_trials, _FA_INDEX_OFFSET):
        hits += int((stats > thr).sum())
        total += stats.size
    return hits / total


def calibrate_threshold(
    spec: ExperimentSpec,
    noise_trials: int = 20_000,
    tolerance: float = 0.1,
) -> float:
    """Threshold multiplier whose noise-only FA rate hits target_pfa.

    Freezes one set of noise-only statistics, normalized by the
    uncalibrated threshold, then bisects the multiplier until the
    empirical rate is within the relative tolerance of the target.
    Deterministic given base_seed, and independent of the trial streams
    used by run_experiment and measure_fa.
    """
    if noise_trials < 10_000:
        raise ValueError("calibration needs at least 10000 noise trials")
    if not 0.0 < tolerance < 1.0:
        raise ValueError("tolerance must lie in (0, 1)")
    _, plan, w_a = _build(spec)
    base = float(_detector(spec, 1.0).threshold(spec.N * 1.0))
    ratios = np.sort(
        np.concatenate(
            [
                (stats / base).ravel()
                for stats in _noise_stats(
                    spec, plan, w_a, noise_trials, _CAL_INDEX_OFFSET
                )
            ]
        )
    )
    total = ratios.size
    target = spec.target_pfa

    def rate(multiplier: float) -> float:
        return (total - np.searchsorted(ratios, multiplier, side="right")) / total

    lo = 0.0
    hi = float(ratios[-1]) + 1.0  # rate(hi) == 0 < target
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        r = rate(mid)
        if abs(r - target) <= tolerance * target:
            return mid
        if r > target:
            lo = mid
        else:
            hi = mid
    raise CalibrationError(
        "false-alarm rate is insensitive to the threshold multiplier near "
        f"target {target:g} (closest rate {rate(0.5 * (lo + hi)):g})"
    )


def _csv_cell(value) -> str:
    if value is None:
        return "nan"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def curves_to_csv(points) -> str:
    """Render CurvePoints as delimited text, shortest round-trip floats."""
    lines = [CSV_HEADER]
    for p in points:
        lines.append(
            ",".join(
                _csv_cell(v)
                for v in (
                    p.snr_db,
                    p.p_d_sim,
                    p.p_d_err,
                    p.p_m_sim,
                    p.p_m_err,
                    p.p_d2_sim,
                    p.p_m2_sim,
                    p.p_d_theory,
                    p.p_m_theory,
                    p.trials,
                )
            )
        )
    return "\n".join(lines) + "\n"


def complexity_to_csv(configs) -> str:
    """Complex-multiply counts for (N, M, R) configurations as CSV."""
    lines = ["variant,N,M,R,cm_count"]
    for N, M, R in configs:
        for variant, count in complexity(N, M, R).items():
            lines.append(f"{variant},{N},{M},{R},{_csv_cell(float(count))}")
    return "\n".join(lines) + "\n"


def spec_to_json(spec: ExperimentSpec) -> str:
    """Serialize an ExperimentSpec field-for-field."""
    return json.dumps(asdict(spec), indent=2) + "\n"


def spec_from_json(text: str) -> ExperimentSpec:
    """Inverse of spec_to_json; unknown fields are rejected."""
    data = json.loads(text)
    if not isinstance(data, dict) or "channel" not in data:
        raise ValueError("experiment config must be an object with a channel")
    channel = data.pop("channel")
    if not isinstance(channel, dict):
        raise ValueError("channel must be an object")
    known = set(ExperimentSpec.__dataclass_fields__) - {"channel"}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown experiment fields: {sorted(unknown)}")
    return ExperimentSpec(channel=ChannelSpec(**channel), **data)
