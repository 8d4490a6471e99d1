"""Command line front end.

Subcommands:

* ``filter``     run the block matched filter over a sample file
* ``acquire``    one-shot acquisition (threshold test + max search)
* ``analyze``    print analytic probability curves
* ``montecarlo`` run a Monte Carlo experiment and emit CSV
* ``calibrate``  find the threshold multiplier for a target FA rate
* ``complexity`` print the complex-multiply count table
* ``doppler``    emit a lag-by-frequency energy grid

Sample files are interleaved little-endian float64 (re, im) pairs.
Monte Carlo experiments are described by a JSON file mirroring
ExperimentSpec field-for-field; every field can be overridden by the
flag of the same name.  Figures are written only where a ``--figure``
path is given, keeping CSV the canonical output.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .acquisition import DetectorConfig, detect, gamma_from_pfa, max_search
from .analytics import p_fa, p_fa_max, p_d, p_d_max, p_m_approx, p_m_exact
from .block_filter import (
    analyze,
    doppler_grid,
    excise,
    filter_signal,
    filter_stream,
    plan_filter,
)
from .channels import CHANNEL_KINDS, ChannelSpec
from .harness import (
    ExperimentSpec,
    calibrate_threshold,
    complexity_to_csv,
    curves_to_csv,
    run_experiment,
    spec_from_json,
)
from .signals import (
    as_samples,
    generate_gold_preamble,
    load_samples,
    make_window,
    save_samples,
    synthesize,
)

__all__ = ["main", "build_parser"]

_ANALYZE_HEADER = "snr_db,p_fa,p_fa_m,p_d,p_m,p_d_m,p_M"


def _write_text(path: str | None, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _snr_grid(value: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in value.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad SNR grid {value!r}: {exc}") from None


def _reference_samples(args) -> np.ndarray:
    """Unit-energy matched-filter reference from a file or a Gold code."""
    if getattr(args, "reference", None):
        s = load_samples(args.reference)
    else:
        s = generate_gold_preamble(degree=args.gold_degree).chips.astype(np.complex128)
    s = as_samples(s)
    norm = float(np.linalg.norm(s))
    if norm == 0.0:
        raise ValueError("reference has zero energy")
    return s / norm


def _windows(args, M: int):
    w_a = make_window(args.analysis_window, M, args.window_beta)
    w_r = make_window(args.reference_window, M, args.window_beta)
    return w_a, w_r


def _add_reference_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--reference", help="sample file with the reference signal")
    p.add_argument(
        "--gold-degree",
        type=int,
        default=6,
        help="degree of the extended Gold preamble when no --reference is given",
    )


def _add_framing_flags(p: argparse.ArgumentParser, m_default=None) -> None:
    p.add_argument("--M", type=int, default=m_default, help="block size")
    p.add_argument("--R", type=int, default=None, help="hop (defaults to M)")
    p.add_argument(
        "--analysis-window",
        default="rectangular",
        choices=("rectangular", "kaiser"),
    )
    p.add_argument(
        "--reference-window",
        default="rectangular",
        choices=("rectangular", "kaiser"),
    )
    p.add_argument("--window-beta", type=float, default=8.0)
    p.add_argument(
        "--mode",
        default="interleaved",
        choices=("interleaved", "aligned"),
        help="how overlapped frames recombine across filter blocks",
    )


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON experiment file mirroring ExperimentSpec")
    p.add_argument("--channel", choices=CHANNEL_KINDS, default=None)
    p.add_argument("--kappa", type=float, default=None)
    p.add_argument("--tap-separation", type=int, default=None)
    p.add_argument("--M", type=int, default=None)
    p.add_argument("--R", type=int, default=None)
    p.add_argument("--N", type=int, default=None)
    p.add_argument(
        "--analysis-window", choices=("rectangular", "kaiser"), default=None
    )
    p.add_argument(
        "--reference-window", choices=("rectangular", "kaiser"), default=None
    )
    p.add_argument("--window-beta", type=float, default=None)
    p.add_argument(
        "--snr-grid-db",
        type=_snr_grid,
        default=None,
        help="comma-separated SNR grid, e.g. -5,0,5,10",
    )
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--target-pfa", type=float, default=None)
    p.add_argument("--base-seed", type=int, default=None)


def _experiment_from_args(args) -> ExperimentSpec:
    if args.config:
        spec = spec_from_json(Path(args.config).read_text())
    else:
        spec = ExperimentSpec(channel=ChannelSpec("rayleigh_flat"))

    if args.channel or args.kappa is not None or args.tap_separation is not None:
        old = spec.channel
        kind = args.channel or old.kind
        kappa = args.kappa if args.kappa is not None else old.kappa
        if kind != "rician" and args.kappa is None:
            kappa = None
        sep = (
            args.tap_separation
            if args.tap_separation is not None
            else old.tap_separation
        )
        channel = ChannelSpec(kind, old.snr_db, kappa, sep)
    else:
        channel = spec.channel

    overrides = {}
    for name in (
        "M",
        "R",
        "N",
        "analysis_window",
        "reference_window",
        "window_beta",
        "snr_grid_db",
        "trials",
        "target_pfa",
        "base_seed",
    ):
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    return replace(spec, channel=channel, **overrides)


def _cmd_filter(args) -> int:
    x = load_samples(args.input)
    s = _reference_samples(args)
    M = args.M or s.size
    R = args.R or M
    w_a, w_r = _windows(args, M)
    plan = plan_filter(s, w_r, M, R, mode=args.mode)
    if args.engine == "streaming":
        out = filter_stream(x, plan, analysis_window=w_a)
    else:
        out = filter_signal(x, plan, analysis_window=w_a)
    save_samples(args.output, out)
    return 0


def _cmd_acquire(args) -> int:
    y = load_samples(args.input)
    s = _reference_samples(args)
    N = s.size
    if y.size < N:
        raise ValueError(f"input has {y.size} samples, reference needs {N}")
    M = args.M or N
    R = args.R or M
    w_a, w_r = _windows(args, M)
    if args.excise is not None:
        grid = excise(analyze(y, w_a, M, R), args.excise)
        y = synthesize(grid)[: y.size]
    plan = plan_filter(s, w_r, M, R, mode=args.mode)
    out = filter_signal(y, plan, analysis_window=w_a)
    n_lags = y.size - N + 1
    mf = out[N - 1 : N - 1 + n_lags]
    # Per-lag received energy over the N-sample window the lag aligns with.
    energy = np.convolve(np.abs(y) ** 2, np.ones(N))[N - 1 : N - 1 + n_lags]
    cfg = DetectorConfig.from_windows(
        args.target_pfa,
        N,
        M,
        R,
        analysis_window=w_a,
        reference_window=w_r,
        include_window_ratio=not args.no_window_correction,
        threshold_multiplier=args.threshold_multiplier,
    )
    decisions = detect(mf, energy, cfg)
    best = max_search(decisions)
    decisions[best.lag] = best
    if args.output:
        lines = ["lag,statistic,threshold,detected,is_max"]
        lines += [
            f"{d.lag},{d.statistic!r},{d.threshold_value!r},"
            f"{int(d.detected)},{int(d.is_max)}"
            for d in decisions
        ]
        _write_text(args.output, "\n".join(lines) + "\n")
    if args.figure:
        from . import report

        report.save_acquisition(decisions, args.figure)
    print(
        f"lag {best.lag}: statistic {best.statistic!r} vs threshold "
        f"{best.threshold_value!r} -> {'DETECTED' if best.detected else 'below threshold'}"
    )
    return 0


def _cmd_analyze(args) -> int:
    lines = [_ANALYZE_HEADER]
    kind = args.channel
    if kind == "rician" and args.kappa is None:
        raise ValueError("rician curves need --kappa")
    gamma = gamma_from_pfa(args.target_pfa, args.N)
    for snr_db in args.snr_grid_db:
        mu = 10.0 ** (snr_db / 10.0)
        if kind == "rician":
            mu_kw = {"kappa": args.kappa}
            mu_eff = mu * args.kappa / (args.kappa + 1.0)
        else:
            mu_kw = {}
            mu_eff = mu
        pfa = p_fa(gamma, args.N)
        pfam = p_fa_max(gamma, args.N)
        pd = p_d(kind, mu_eff, gamma, args.N, **mu_kw)
        if args.method == "approximate":
            pm = p_m_approx(kind, mu_eff, **mu_kw)
        else:
            pm = p_m_exact(kind, mu_eff, args.N, **mu_kw)
        pdm = p_d_max(pfa, pd, args.N)
        row = (snr_db, pfa, pfam, pd, pm, pdm, pm * pdm)
        lines.append(",".join(repr(float(v)) for v in row))
    _write_text(args.output, "\n".join(lines) + "\n")
    return 0


def _cmd_montecarlo(args) -> int:
    spec = _experiment_from_args(args)
    points = run_experiment(
        spec,
        threshold_multiplier=args.threshold_multiplier,
        pm_method=args.pm_method,
    )
    _write_text(args.output, curves_to_csv(points))
    if args.figure:
        from . import report

        report.save_curves(points, args.figure, title=spec.channel.kind)
    return 0


def _cmd_calibrate(args) -> int:
    spec = _experiment_from_args(args)
    multiplier = calibrate_threshold(spec, noise_trials=args.noise_trials)
    print(repr(multiplier))
    return 0


def _cmd_complexity(args) -> int:
    _write_text(args.output, complexity_to_csv([(args.N, args.M, args.R)]))
    return 0


def _cmd_doppler(args) -> int:
    x = load_samples(args.input)
    s = _reference_samples(args)
    M = args.M or s.size
    R = args.R or M
    _, w_r = _windows(args, M)
    plan = plan_filter(s, w_r, M, R, mode=args.mode)
    grid = doppler_grid(x, plan, args.bins)
    lines = ["# rows: lag; columns: frequency bin"]
    lines += [",".join(repr(float(v)) for v in row) for row in grid]
    _write_text(args.output, "\n".join(lines) + "\n")
    if args.figure:
        from . import report

        report.save_doppler(grid, args.figure)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blockacq",
        description="windowed, overlapped frequency-domain block matched filtering "
        "and acquisition probability analysis",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("filter", help="block-filter a sample file")
    p.add_argument("--input", required=True, help="input sample file")
    p.add_argument("--output", required=True, help="output sample file")
    _add_reference_flags(p)
    _add_framing_flags(p)
    p.add_argument(
        "--engine",
        default="batch",
        choices=("batch", "streaming"),
        help="one-shot batch evaluation or the cycle-by-cycle engine",
    )
    p.set_defaults(func=_cmd_filter)

    p = sub.add_parser("acquire", help="one-shot acquisition on a sample file")
    p.add_argument("--input", required=True)
    p.add_argument("--output", help="per-lag decision CSV ('-' for stdout)")
    p.add_argument("--figure", help="statistic-vs-lag plot file")
    _add_reference_flags(p)
    _add_framing_flags(p)
    p.add_argument("--target-pfa", type=float, default=0.01)
    p.add_argument("--threshold-multiplier", type=float, default=1.0)
    p.add_argument(
        "--no-window-correction",
        action="store_true",
        help="drop the window-norm ratio from the threshold normalization",
    )
    p.add_argument(
        "--excise",
        type=float,
        default=None,
        metavar="FACTOR",
        help="zero bins above FACTOR times the per-column median power "
        "before matching",
    )
    p.set_defaults(func=_cmd_acquire)

    p = sub.add_parser("analyze", help="print analytic probability curves")
    p.add_argument("--channel", choices=("awgn", "rayleigh", "rician"), default="rayleigh")
    p.add_argument("--kappa", type=float, default=None)
    p.add_argument("--N", type=int, default=64)
    p.add_argument("--target-pfa", type=float, default=0.01)
    p.add_argument(
        "--snr-grid-db",
        type=_snr_grid,
        default=tuple(float(s) for s in range(-5, 26, 2)),
    )
    p.add_argument("--method", choices=("approximate", "exact"), default="exact")
    p.add_argument("--output", default="-")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("montecarlo", help="run a Monte Carlo experiment")
    _add_experiment_flags(p)
    p.add_argument("--threshold-multiplier", type=float, default=1.0)
    p.add_argument("--pm-method", choices=("approximate", "exact"), default="exact")
    p.add_argument("--output", default="-", help="curve CSV ('-' for stdout)")
    p.add_argument("--figure", help="probability-curve plot file")
    p.set_defaults(func=_cmd_montecarlo)

    p = sub.add_parser("calibrate", help="calibrate the threshold multiplier")
    _add_experiment_flags(p)
    p.add_argument("--noise-trials", type=int, default=20_000)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("complexity", help="print complex-multiply counts")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--R", type=int, required=True)
    p.add_argument("--output", default="-")
    p.set_defaults(func=_cmd_complexity)

    p = sub.add_parser("doppler", help="emit a lag-by-frequency energy grid")
    p.add_argument("--input", required=True)
    p.add_argument("--output", default="-")
    p.add_argument("--figure", help="grid image file")
    _add_reference_flags(p)
    _add_framing_flags(p)
    p.add_argument("--bins", type=int, required=True, help="frequency bin count")
    p.set_defaults(func=_cmd_doppler)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
