"""Closed-form acquisition probabilities for energy-threshold detectors.

The detector declares acquisition when the squared magnitude of a matched
filter output exceeds a threshold, and locates the preamble by picking the
lag of the maximum.  This module collects the probabilities that describe
that procedure: false alarm on a single cell and on the maximum, detection
at the true lag, the probability that the maximum lands on the true lag,
and their combinations, for AWGN, flat Rayleigh, and Rician channels.

Two families are provided for the max-on-true-lag probability.  The
approximate family replaces the maximum of the noise cells with a fixed
2.33 sigma excursion.  The exact family models that maximum through the
expected extreme of N - 1 unit-mean exponential variables and leads to
Marcum Q expressions and, in the Rician case, a weighted Laguerre series.

Everything here is scalar and pure; vectorization over SNR grids happens
in the callers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
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
]

# Noise excursion used by the approximate miss probability: the maximum of
# the non-synchro cells is taken to sit 2.33 standard deviations above the
# mean of the envelope statistic.
SIGMA_FACTOR = 2.33

# Largest Poisson rate the direct series evaluates before exp(-rate)
# degrades; beyond this the statistic is effectively deterministic.
_SERIES_ARG_MAX = 700.0

# Gap between the Marcum arguments beyond which the value saturates: the
# crossing probability is bounded by exp(-gap^2 / 2), far below double
# precision at this gap.
_SATURATION_GAP = 40.0

_ANALYTIC_KINDS = ("awgn", "rayleigh", "rician")


class ConvergenceError(RuntimeError):
    """A series failed to reach its tolerance within the term budget."""


@dataclass(frozen=True)
class SpecialFunctionsCtx:
    """Accuracy budget for the series evaluations.

    tolerance is the truncation-error target (absolute, conservative since
    every series here is bounded by 1), max_terms caps the term count.
    """

    tolerance: float = 1e-10
    max_terms: int = 100_000

    def __post_init__(self) -> None:
        if not 0.0 < self.tolerance < 1.0:
            raise ValueError("tolerance must lie in (0, 1)")
        if self.max_terms < 1:
            raise ValueError("max_terms must be at least 1")


_DEFAULT_CTX = SpecialFunctionsCtx()


@dataclass(frozen=True)
class SeriesResult:
    """Value of a truncated series together with its convergence status."""

    value: float
    terms: int
    converged: bool

    def __float__(self) -> float:
        return self.value


def _canonical_kind(kind: str) -> str:
    """Map channel labels onto the analytic families.

    The two-tap Rayleigh channel has no dedicated closed forms; its
    per-path probabilities are flat-Rayleigh curves that callers combine
    with diversity_combine.
    """
    if kind in ("rayleigh_flat", "rayleigh_2tap"):
        return "rayleigh"
    if kind not in _ANALYTIC_KINDS:
        raise ValueError(f"unknown channel kind {kind!r}")
    return kind


def _check_kappa(kind: str, kappa: float | None) -> float:
    if kind == "rician":
        if kappa is None:
            raise ValueError("rician probabilities need the kappa factor")
        if not kappa > 0.0 or not math.isfinite(kappa):
            raise ValueError("kappa must be positive and finite")
        return kappa
    if kappa is not None:
        raise ValueError(f"kappa is only meaningful for rician, not {kind!r}")
    return 0.0


def _check_prob(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
    return value


def marcum_q(
    a: float,
    b: float,
    ctx: SpecialFunctionsCtx | None = None,
    full_output: bool = False,
) -> float | SeriesResult:
    """First-order Marcum Q function Q_1(a, b).

    Complementary CDF at b of a Rician envelope with noncentrality a, unit
    noise variance per quadrature.  Evaluated by the canonical series

        Q_1(a, b) = sum_n PoissonPMF(n; a^2/2) * PoissonCDF(n; b^2/2),

    truncated once the remaining Poisson mass of the a-rate drops below the
    context tolerance, which bounds the truncation error by that mass.
    With full_output=True the truncation diagnostics are returned as well.
    """
    if ctx is None:
        ctx = _DEFAULT_CTX
    a = float(a)
    b = float(b)
    if a < 0.0 or b < 0.0 or not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("marcum_q arguments must be finite and non-negative")

    if b == 0.0:
        result = SeriesResult(1.0, 0, True)
        return result if full_output else result.value
    alpha = 0.5 * a * a
    if a == 0.0:
        result = SeriesResult(math.exp(-0.5 * b * b), 0, True)
        return result if full_output else result.value
    beta = 0.5 * b * b
    # The envelope sits within exp(-gap^2/2) of its center radius a, so a
    # large argument gap pins the value to 0 or 1 exactly in double
    # precision; this also keeps extreme operating points evaluable.
    if a >= b + _SATURATION_GAP:
        result = SeriesResult(1.0, 0, True)
        return result if full_output else result.value
    if b >= a + _SATURATION_GAP:
        result = SeriesResult(0.0, 0, True)
        return result if full_output else result.value
    if alpha > _SERIES_ARG_MAX or beta > _SERIES_ARG_MAX:
        raise ConvergenceError(
            "marcum_q series arguments exceed the stable range "
            f"(a^2/2 = {alpha:.3g}, b^2/2 = {beta:.3g}, limit {_SERIES_ARG_MAX:g})"
        )

    pmf_a = math.exp(-alpha)
    pmf_b = math.exp(-beta)
    cdf_b = pmf_b
    total = pmf_a * cdf_b
    tail_a = 1.0 - pmf_a
    n = 0
    converged = tail_a <= ctx.tolerance
    while not converged and n < ctx.max_terms:
        n += 1
        pmf_a *= alpha / n
        pmf_b *= beta / n
        cdf_b += pmf_b
        total += pmf_a * cdf_b
        tail_a -= pmf_a
        converged = tail_a <= ctx.tolerance
    if not converged:
        raise ConvergenceError(
            f"marcum_q did not converge within {ctx.max_terms} terms"
        )
    result = SeriesResult(min(max(total, 0.0), 1.0), n + 1, True)
    return result if full_output else result.value


def p_fa(gamma: float, N: int) -> float:
    """Single-cell false alarm rate exp(-gamma N) of the energy detector."""
    gamma = float(gamma)
    if gamma <= 0.0:
        raise ValueError("gamma must be positive")
    if N < 1:
        raise ValueError("N must be at least 1")
    return math.exp(-gamma * N)


def p_fa_max(gamma: float, N: int) -> float:
    """Probability that the maximum over N noise-only cells triggers.

    Equals 1 - (1 - p_fa)^N; evaluated through expm1/log1p so small rates
    survive in double precision.
    """
    single = p_fa(gamma, N)
    return -math.expm1(N * math.log1p(-single))


def p_d(
    kind: str,
    mu: float,
    gamma: float,
    N: int,
    kappa: float | None = None,
    ctx: SpecialFunctionsCtx | None = None,
) -> float:
    """Detection probability at the true lag for threshold gamma.

    mu is the linear SNR of the deterministic signal component: the sole
    component in AWGN, the mean SNR in Rayleigh, and the line-of-sight
    part in Rician (total mean SNR is then mu * (1 + 1/kappa)).
    """
    kind = _canonical_kind(kind)
    kappa = _check_kappa(kind, kappa)
    mu = float(mu)
    gamma = float(gamma)
    if mu < 0.0:
        raise ValueError("mu must be non-negative")
    if gamma <= 0.0:
        raise ValueError("gamma must be positive")
    if N < 1:
        raise ValueError("N must be at least 1")

    if kind == "awgn":
        return marcum_q(math.sqrt(2.0 * mu), math.sqrt(2.0 * gamma * (N + mu)), ctx)
    if kind == "rayleigh":
        return math.exp(-gamma * N / (mu + 1.0))
    # Rician: the scattered part inflates the effective noise floor by
    # mu/kappa, which rescales both Marcum arguments.
    denom = mu / kappa + 1.0
    return marcum_q(
        math.sqrt(2.0 * mu / denom),
        math.sqrt(2.0 * gamma * (N + mu) / denom),
        ctx,
    )


def p_m_approx(
    kind: str,
    mu: float,
    kappa: float | None = None,
    ctx: SpecialFunctionsCtx | None = None,
) -> float:
    """Probability that the true lag carries the maximum, 2.33 sigma model.

    The maximum over the noise-only lags is replaced by a fixed excursion
    of SIGMA_FACTOR standard deviations, turning the miss probability into
    a single threshold crossing.
    """
    kind = _canonical_kind(kind)
    kappa = _check_kappa(kind, kappa)
    mu = float(mu)
    if mu < 0.0:
        raise ValueError("mu must be non-negative")

    level = SIGMA_FACTOR * SIGMA_FACTOR
    if kind == "awgn":
        return marcum_q(math.sqrt(2.0 * mu), SIGMA_FACTOR * math.sqrt(2.0), ctx)
    if kind == "rayleigh":
        return math.exp(-level / (mu + 1.0))
    denom = mu / kappa + 1.0
    return marcum_q(
        math.sqrt(2.0 * mu / denom),
        math.sqrt(2.0 * level / denom),
        ctx,
    )


def alpha_n(N: int) -> float:
    """Expected maximum of N independent unit-mean exponential draws.

    This is the harmonic number H_N, which grows like log N + 0.5772; it
    calibrates where the largest noise-only cell typically sits.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    return math.fsum(1.0 / k for k in range(1, N + 1))


def incomplete_exponential(n: int, x: float, literal: bool = False) -> float:
    """Partial exponential sum e_n(x) = sum_{m<n} x^m / m!.

    literal=True drops the factorials and returns the plain power sum
    sum_{m<n} x^m, a variant kept for cross-checking series that were
    stated in that form.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    x = float(x)
    term = 1.0
    terms = []
    for m in range(n):
        terms.append(term)
        term *= x if literal else x / (m + 1)
    return math.fsum(terms)


def _laguerre_at_negative(n: int, x: float) -> float:
    """Laguerre polynomial L_n evaluated at -x for x >= 0.

    All recurrence terms are positive there, so the three-term recurrence
    is stable.
    """
    if n == 0:
        return 1.0
    prev = 1.0
    cur = 1.0 + x
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 + x) * cur - k * prev) / (k + 1)
    return cur


def confluent_m(
    a: float,
    b: float,
    x: float,
    ctx: SpecialFunctionsCtx | None = None,
) -> float:
    """Kummer confluent hypergeometric function M(a, b, x).

    Positive integer a with b = 1 routes through exp(x) * L_{a-1}(-x),
    which stays stable for large x; negative x is reflected with the
    Kummer transformation; everything else uses the defining series.
    """
    if ctx is None:
        ctx = _DEFAULT_CTX
    a = float(a)
    b = float(b)
    x = float(x)
    if b <= 0.0 and b == int(b):
        raise ValueError("b must not be a non-positive integer")
    if x < 0.0:
        return math.exp(x) * confluent_m(b - a, b, -x, ctx)
    if x > _SERIES_ARG_MAX:
        raise ConvergenceError(f"confluent_m argument too large: x = {x:.3g}")
    if a == int(a) and a >= 1.0 and b == 1.0:
        return math.exp(x) * _laguerre_at_negative(int(a) - 1, x)

    term = 1.0
    total = 1.0
    for n in range(ctx.max_terms):
        term *= (a + n) * x / ((b + n) * (n + 1))
        total += term
        if abs(term) <= ctx.tolerance * max(abs(total), 1.0):
            return total
    raise ConvergenceError(
        f"confluent_m did not converge within {ctx.max_terms} terms"
    )


def _p_m_exact_rician_series(
    mu: float,
    alpha: float,
    kappa: float,
    ctx: SpecialFunctionsCtx,
) -> float:
    """Exact Rician miss-side series for a single sequence.

    The matched filter output at the true lag is complex Gaussian with a
    line-of-sight mean (SNR mu) and variance inflated by the scattered
    power mu_t = mu / kappa.  Averaging the AWGN exceedance over that
    fluctuation yields

        P_m = 1 - sum_n w_n * T_{n+1}(alpha),

    where T_{n+1} is the upper Poisson tail at rate alpha and the weights
    w_n = exp(-c) mu_t^n L_n(-z) / (mu_t+1)^{n+1}, with c = mu/(mu_t+1)
    and z = c/mu_t, sum to one.  The weights follow a stable three-term
    recurrence; truncation error is bounded by the unspent weight mass.
    """
    mu_t = mu / kappa
    denom = mu_t + 1.0
    c = mu / denom
    if c > _SERIES_ARG_MAX:
        raise ConvergenceError(f"line-of-sight SNR too large: c = {c:.3g}")

    # Upper Poisson tail T_1 = P(Poisson(alpha) >= 1) and its decrements.
    tail = -math.expm1(-alpha)
    pmf = math.exp(-alpha)

    w_prev = 0.0
    w = math.exp(-c) / denom
    spent = w
    total = w * tail
    for n in range(ctx.max_terms):
        if 1.0 - spent <= ctx.tolerance:
            return min(max(1.0 - total, 0.0), 1.0)
        pmf *= alpha / (n + 1)
        tail = max(tail - pmf, 0.0)
        w_prev, w = w, (
            ((2 * n + 1) * mu_t + c) * w - n * mu_t * mu_t * w_prev / denom
        ) / ((n + 1) * denom)
        spent += w
        total += w * tail
    raise ConvergenceError(
        f"rician miss series did not converge within {ctx.max_terms} terms"
    )


def _p_m_exact_rician_printed(
    mu: float,
    alpha: float,
    kappa: float,
    n_sequences: int,
    ctx: SpecialFunctionsCtx,
) -> float:
    """Rician miss series in its original stated form, kept for arbitration.

    Uses the literal power-sum variant of the incomplete exponential.  The
    bracket exp(K alpha) - sum_m (K alpha)^m grows geometrically with the
    term index, so for most parameters the partial sums diverge and a
    ConvergenceError is raised rather than a silently truncated value.
    """
    mu_t = mu / kappa
    if mu_t == 0.0:
        raise ConvergenceError("printed series is singular for a zero scattered part")
    K = n_sequences
    x = K * alpha
    if x > _SERIES_ARG_MAX:
        raise ConvergenceError(f"printed series argument too large: {x:.3g}")
    exp_x = math.exp(x)
    z = mu / (2.0 * mu_t * (K * mu_t + 1.0))
    ratio = K * K * mu_t / (K * mu_t + 1.0)

    weight = 2.0 ** (K - 1) / (K * mu_t + 1.0)
    total = 0.0
    prev_mag = math.inf
    for n in range(ctx.max_terms):
        term = weight * confluent_m(n + 1, 1.0, z, ctx) * (
            exp_x - incomplete_exponential(n + K, x, literal=True)
        )
        total += term
        mag = abs(term)
        if mag <= ctx.tolerance * max(abs(total), 1.0):
            return 1.0 - total
        if mag > 1e12 or (n > 8 and mag > prev_mag and mag > 1.0):
            raise ConvergenceError(
                "printed rician miss series diverges for these parameters "
                f"(term {n} has magnitude {mag:.3g})"
            )
        prev_mag = mag
        weight *= ratio
    raise ConvergenceError(
        f"printed rician miss series did not converge within {ctx.max_terms} terms"
    )


def p_m_exact(
    kind: str,
    mu: float,
    N: int,
    kappa: float | None = None,
    n_sequences: int = 1,
    rician_series: str = "corrected",
    ctx: SpecialFunctionsCtx | None = None,
) -> float:
    """Probability that the true lag carries the maximum, extreme-value model.

    The maximum of the N - 1 noise-only cells is placed at its expected
    value alpha_{N-1} (see alpha_n) instead of a fixed sigma excursion.
    mu follows the same convention as p_d.  n_sequences counts the
    noncoherently combined preambles; the AWGN form and the corrected
    Rician series cover a single sequence, the Rayleigh closed form any
    count.  rician_series selects "corrected" (default, derived from the
    Gaussian fluctuation model) or "printed" (the originally stated form,
    which diverges for most parameters and then raises ConvergenceError).
    """
    if ctx is None:
        ctx = _DEFAULT_CTX
    kind = _canonical_kind(kind)
    kappa = _check_kappa(kind, kappa)
    mu = float(mu)
    if mu < 0.0:
        raise ValueError("mu must be non-negative")
    if n_sequences < 1:
        raise ValueError("n_sequences must be at least 1")
    if N < 1:
        raise ValueError("N must be at least 1")
    if N == 1:
        # No competing cells: the single candidate is always the maximum.
        return 1.0
    alpha = alpha_n(N - 1)

    if kind == "awgn":
        if n_sequences != 1:
            raise ValueError("the AWGN form covers a single sequence")
        return marcum_q(math.sqrt(2.0 * mu), math.sqrt(2.0 * alpha), ctx)

    if kind == "rayleigh":
        K = n_sequences
        if K > 1 and mu == 0.0:
            raise ValueError("mean SNR must be positive when combining sequences")
        scale = K * mu / (K * mu + 1.0)
        prefactor = 1.0 if K == 1 else scale ** (1 - K)
        return prefactor * math.exp(-K * alpha / (K * mu + 1.0))

    if rician_series == "corrected":
        if n_sequences != 1:
            raise ValueError("the corrected rician series covers a single sequence")
        return _p_m_exact_rician_series(mu, alpha, kappa, ctx)
    if rician_series == "printed":
        return _p_m_exact_rician_printed(mu, alpha, kappa, n_sequences, ctx)
    raise ValueError(f"unknown rician_series {rician_series!r}")


def p_d_max(p_fa_value: float, p_d_value: float, N: int) -> float:
    """Probability that the maximum over all N cells exceeds the threshold.

    One cell holds the signal, the other N - 1 are noise; the maximum
    triggers unless every cell stays below, so
    1 - (1 - p_fa)^(N-1) (1 - p_d).
    """
    pf = _check_prob("p_fa", p_fa_value)
    pd = _check_prob("p_d", p_d_value)
    if N < 1:
        raise ValueError("N must be at least 1")
    return 1.0 - (1.0 - pf) ** (N - 1) * (1.0 - pd)


def p_M(p_m_value: float, p_d_max_value: float) -> float:
    """Probability of acquiring: the maximum is the true lag and triggers."""
    return _check_prob("p_m", p_m_value) * _check_prob("p_d_max", p_d_max_value)


def diversity_combine(per_path_probs) -> float:
    """Probability that at least one path succeeds: 1 - prod(1 - p_k)."""
    probs = [_check_prob("path probability", p) for p in per_path_probs]
    product = 1.0
    for p in probs:
        product *= 1.0 - p
    return 1.0 - product


@dataclass(frozen=True)
class ProbabilityReport:
    """Bundle of the acquisition probabilities at one operating point."""

    p_fa: float
    p_fa_m: float
    p_d: float
    p_m: float
    p_d_m: float
    p_M: float
    channel: str
    method: str

    def __post_init__(self) -> None:
        for name in ("p_fa", "p_fa_m", "p_d", "p_m", "p_d_m", "p_M"):
            _check_prob(name, getattr(self, name))
        if abs(self.p_M - self.p_m * self.p_d_m) > 1e-12:
            raise ValueError("p_M must equal p_m * p_d_m")


def probability_report(
    kind: str,
    mu: float,
    gamma: float,
    N: int,
    kappa: float | None = None,
    method: str = "approximate",
    ctx: SpecialFunctionsCtx | None = None,
) -> ProbabilityReport:
    """Evaluate the full probability set for one channel operating point."""
    if method not in ("approximate", "exact"):
        raise ValueError(f"unknown method {method!r}")
    pfa = p_fa(gamma, N)
    pfam = p_fa_max(gamma, N)
    pd = p_d(kind, mu, gamma, N, kappa, ctx)
    if method == "approximate":
        pm = p_m_approx(kind, mu, kappa, ctx)
    else:
        pm = p_m_exact(kind, mu, N, kappa, ctx=ctx)
    pdm = p_d_max(pfa, pd, N)
    return ProbabilityReport(
        p_fa=pfa,
        p_fa_m=pfam,
        p_d=pd,
        p_m=pm,
        p_d_m=pdm,
        p_M=pm * pdm,
        channel=_canonical_kind(kind),
        method=method,
    )
