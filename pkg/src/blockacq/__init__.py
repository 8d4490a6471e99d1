"""Windowed, overlapped frequency-domain block matched filtering.

A library for direct-sequence signal acquisition: an STFT-domain block
filter engine (batch and streaming), a CFAR energy detector, fading
channel models, closed-form acquisition probabilities, and a Monte Carlo
harness that compares simulation against the analytics.

Plotting lives in `blockacq.report` and the command line front end in
`blockacq.cli`; neither is imported here so that library use stays free
of matplotlib.
"""

from .acquisition import Decision, DetectorConfig, detect, gamma_from_pfa, max_search
from .analytics import (
    ConvergenceError,
    ProbabilityReport,
    SeriesResult,
    SpecialFunctionsCtx,
    alpha_n,
    confluent_m,
    diversity_combine,
    incomplete_exponential,
    marcum_q,
    p_M,
    p_d,
    p_d_max,
    p_fa,
    p_fa_max,
    p_m_approx,
    p_m_exact,
    probability_report,
)
from .block_filter import (
    BlockFilterPlan,
    FilterState,
    StftGrid,
    analyze,
    complexity,
    direct_convolve,
    doppler_grid,
    excise,
    filter_cycle,
    filter_signal,
    filter_stream,
    plan_filter,
)
from .channels import CHANNEL_KINDS, ChannelSpec, TrialSeed, apply_channel, noise_variance
from .harness import (
    CSV_HEADER,
    CalibrationError,
    CurvePoint,
    ExperimentSpec,
    calibrate_threshold,
    complexity_to_csv,
    curves_to_csv,
    measure_fa,
    run_experiment,
    spec_from_json,
    spec_to_json,
)
from .signals import (
    PnSequence,
    SampleStream,
    Window,
    as_samples,
    dual_window,
    generate_gold_preamble,
    gold_sequence,
    load_samples,
    load_text,
    make_window,
    msequence,
    save_samples,
    save_text,
    synthesize,
    upsample,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # signals
    "PnSequence",
    "Window",
    "SampleStream",
    "as_samples",
    "msequence",
    "gold_sequence",
    "generate_gold_preamble",
    "make_window",
    "dual_window",
    "synthesize",
    "upsample",
    "save_samples",
    "load_samples",
    "save_text",
    "load_text",
    # block filter
    "StftGrid",
    "BlockFilterPlan",
    "FilterState",
    "analyze",
    "plan_filter",
    "filter_signal",
    "filter_cycle",
    "filter_stream",
    "direct_convolve",
    "doppler_grid",
    "excise",
    "complexity",
    # acquisition
    "DetectorConfig",
    "Decision",
    "gamma_from_pfa",
    "detect",
    "max_search",
    # channels
    "CHANNEL_KINDS",
    "ChannelSpec",
    "TrialSeed",
    "noise_variance",
    "apply_channel",
    # analytics
    "ConvergenceError",
    "SpecialFunctionsCtx",
    "SeriesResult",
    "ProbabilityReport",
    "marcum_q",
    "p_fa",
    "p_fa_max",
    "p_d",
    "p_m_approx",
    "alpha_n",
    "incomplete_exponential",
    "confluent_m",
    "p_m_exact",
    "p_d_max",
    "p_M",
    "diversity_combine",
    "probability_report",
    # harness
    "CSV_HEADER",
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
]
