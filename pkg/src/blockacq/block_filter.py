"""Windowed, overlapped, frequency-domain block convolution.

The engine partitions a long reference (matched filter) into length-M
blocks, multiplies zero-padded 2M-point spectra of windowed input frames
with the per-block frequency responses, and recombines the inverse
transforms by overlap-add, carrying each 2M-sample segment's tail into
later output blocks.  Frames advance by the hop R.  Two recombination
modes are provided:

* ``aligned``: the filter is partitioned at stride M and every frame is
  paired with every filter block so that each of the M/R overlap phases
  reconstructs the full convolution; the phases add in phase, so with
  rectangular windows the output is exactly (M/R) times the plain
  convolution.
* ``interleaved``: the filter is partitioned at the hop R as well and
  each hop step emits one segment at its own offset.  The overlap phases
  interleave instead of replicating, which is the cheap streaming
  arrangement; its output is not proportional to the plain convolution
  once M/R > 1, and the detector threshold must be recalibrated for it.

The two modes coincide at critical sampling (R = M).

Also here: STFT analysis (the inverse of :func:`blockacq.signals.synthesize`),
a time-domain convolution oracle, a lag/Doppler search grid, spectral
excision, and the complexity bookkeeping for the filtering variants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from collections import deque

import numpy as np

from .signals import Window, as_samples, make_window

__all__ = [
    "StftGrid",
    "BlockFilterPlan",
    "FilterState",
    "analyze",
    "plan_filter",
    "filter_cycle",
    "filter_stream",
    "filter_signal",
    "direct_convolve",
    "doppler_grid",
    "excise",
    "complexity",
]


def _check_ratio(M: int, R: int) -> int:
    """Validate the overlap ratio M/R in {1, 2, 4, ...} and return it."""
    if M < 1 or R < 1 or M % R:
        raise ValueError(f"hop {R} must divide block size {M}")
    k = M // R
    if k & (k - 1):
        raise ValueError(f"overlap ratio M/R = {k} must be a power of two")
    return k


def _window_taps(window, M: int) -> np.ndarray:
    """Tap vector of `window` (None means rectangular), checked against M."""
    if window is None:
        return np.ones(M)
    taps = np.asarray(getattr(window, "taps", window), dtype=np.float64)
    if taps.shape != (M,):
        raise ValueError(f"window length {taps.size} does not match block size {M}")
    return taps


@dataclass(frozen=True)
class StftGrid:
    """M x (L*M/R) array of short-time coefficients plus framing parameters."""

    coeffs: np.ndarray
    M: int
    R: int
    L: int
    window: Window

    def __post_init__(self) -> None:
        coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        expected = (self.M, self.L * self.M // self.R)
        if coeffs.shape != expected:
            raise ValueError(f"grid shape {coeffs.shape} does not match {expected}")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def n_columns(self) -> int:
        return self.coeffs.shape[1]


@dataclass(frozen=True)
class BlockFilterPlan:
    """Precomputed 2M-point block spectra of a matched-filter reference.

    `blocks` holds one frequency response per filter block: L critical
    blocks at stride M in aligned mode, L*M/R hop-spaced blocks in
    interleaved mode (L per overlap stream).  `time_blocks` keeps the
    windowed critical partition for per-block (Doppler) processing.
    """

    blocks: np.ndarray
    time_blocks: np.ndarray
    reference_window: Window
    M: int
    R: int
    L: int
    mode: str
    ref_energy: float
    ref_length: int

    @property
    def k(self) -> int:
        """Overlap ratio M/R."""
        return self.M // self.R

    @property
    def n_blocks(self) -> int:
        return self.blocks.shape[0]

    @property
    def block_stride(self) -> int:
        """Frame-index spacing between consecutive filter blocks."""
        return self.k if self.mode == "aligned" else 1

    @property
    def latency_blocks(self) -> int:
        """Output delay of the streaming engine, in M-sample cycles."""
        return 0 if self.k == 1 else 1

    @property
    def peak_offset(self) -> int:
        """Output index of full alignment for a reference at lag 0."""
        return self.ref_length - 1


def analyze(x, window, M: int, R: int) -> StftGrid:
    """Short-time transform of x: windowed length-M frames every R samples.

    The input is zero-padded to L*M samples and framed circularly so that
    exactly L*M/R columns tile the signal; column a holds the DFT of
    w(n) * x((a*R + n) mod L*M).  The negative-exponent DFT here is the
    conjugate of the synthesis exponent, making analyze -> synthesize the
    identity for a valid window pair.
    """
    xp = as_samples(x)
    if xp.ndim != 1:
        raise ValueError("analyze expects a single stream")
    k = _check_ratio(M, R)
    if not isinstance(window, Window):
        window = Window(_window_taps(window, M), "custom") if window is not None \
            else make_window("rectangular", M)
    w = _window_taps(window, M)
    L = max(1, -(-xp.size // M))
    total = L * M
    if xp.size < total:
        xp = np.concatenate([xp, np.zeros(total - xp.size, dtype=np.complex128)])
    n_cols = L * k
    idx = (np.arange(M)[:, None] + R * np.arange(n_cols)[None, :]) % total
    coeffs = np.fft.fft(xp[idx] * w[:, None], axis=0)
    return StftGrid(coeffs, M, R, L, window)


def plan_filter(s, reference_window, M: int, R: int, mode: str = "aligned") -> BlockFilterPlan:
    """Precompute block spectra of the matched filter for reference s.

    The filter is the time-reversed conjugate of s, zero-padded to L*M
    samples, split into length-M blocks, windowed by the reference window,
    zero-padded to 2M, and transformed.  `mode` selects how the overlap
    phases recombine, see the module docstring.
    """
    sp = as_samples(s)
    if sp.ndim != 1 or sp.size == 0:
        raise ValueError("reference must be a nonempty 1-D sequence")
    k = _check_ratio(M, R)
    if mode not in ("aligned", "interleaved"):
        raise ValueError(f"unknown mode {mode!r}")
    if not isinstance(reference_window, Window):
        reference_window = Window(_window_taps(reference_window, M), "custom") \
            if reference_window is not None else make_window("rectangular", M)
    w_r = reference_window.taps
    L = -(-sp.size // M)
    h = np.conj(sp[::-1])
    h = np.concatenate([h, np.zeros(L * M - h.size, dtype=np.complex128)])
    time_blocks = h.reshape(L, M) * w_r
    if mode == "aligned":
        parts = time_blocks
    else:
        n_blocks = L * k
        h_ext = np.concatenate([h, np.zeros(M - R, dtype=np.complex128)])
        idx = np.arange(M)[None, :] + R * np.arange(n_blocks)[:, None]
        parts = h_ext[idx] * w_r
    blocks = np.fft.fft(parts, 2 * M, axis=1)
    return BlockFilterPlan(
        blocks=blocks,
        time_blocks=time_blocks,
        reference_window=reference_window,
        M=M,
        R=R,
        L=L,
        mode=mode,
        ref_energy=float(np.linalg.norm(sp)),
        ref_length=int(sp.size),
    )


def _steps_to_output(X: np.ndarray, plan: BlockFilterPlan, n_out: int) -> np.ndarray:
    """Convolve frame spectra with the plan's blocks and overlap-add.

    X has shape (..., n_frames, 2M) with frame f taken at sample
    f*R - (M - R); the returned output drops that lead-in and is trimmed
    to n_out samples.
    """
    H = plan.blocks
    stride = plan.block_stride
    n_frames = X.shape[-2]
    n_steps = n_frames + (plan.n_blocks - 1) * stride
    Y = np.zeros(X.shape[:-2] + (n_steps, X.shape[-1]), dtype=np.complex128)
    for m in range(plan.n_blocks):
        off = m * stride
        Y[..., off:off + n_frames, :] += X * H[m]
    segs = np.fft.ifft(Y, axis=-1)
    hop, lead = plan.R, plan.M - plan.R
    groups = segs.shape[-1] // hop
    acc = np.zeros(Y.shape[:-2] + (n_steps + groups, hop), dtype=np.complex128)
    for g in range(groups):
        acc[..., g:g + n_steps, :] += segs[..., :, g * hop:(g + 1) * hop]
    flat = acc.reshape(Y.shape[:-2] + ((n_steps + groups) * hop,))
    return flat[..., lead:lead + n_out]


def filter_signal(x, plan: BlockFilterPlan, analysis_window=None) -> np.ndarray:
    """Full block-filter response of x, one batch per leading axis.

    Returns the complete response of length n + L*M - 1 along the last
    axis, equal (in aligned mode, rectangular windows, up to the M/R
    replication factor) to direct time-domain convolution with the padded
    matched filter.
    """
    xp = np.asarray(as_samples(x))
    w = _window_taps(analysis_window, plan.M)
    M, R = plan.M, plan.R
    n = xp.shape[-1]
    if n == 0:
        raise ValueError("empty input")
    n_out = n + plan.L * M - 1
    lead = M - R
    n_frames = -(-(n + lead) // R)
    padded = np.zeros(xp.shape[:-1] + ((n_frames - 1) * R + M,), dtype=np.complex128)
    padded[..., lead:lead + n] = xp
    idx = np.arange(M)[None, :] + R * np.arange(n_frames)[:, None]
    X = np.fft.fft(padded[..., idx] * w, 2 * M, axis=-1)
    return _steps_to_output(X, plan, n_out)


class FilterState:
    """Mutable per-stream state of the cycle-by-cycle block filter.

    Holds the recent frame spectra, the overlap-add accumulator whose
    first M samples are the next output block, and the last M - R input
    samples needed to build overlapping frames.  One state serves one
    sample stream; distinct states are independent.
    """

    def __init__(self, plan: BlockFilterPlan, analysis_window=None):
        self.plan = plan
        self.analysis_taps = _window_taps(analysis_window, plan.M)
        lookback = (plan.n_blocks - 1) * plan.block_stride + 1
        self._past: deque[np.ndarray] = deque(maxlen=lookback)
        self._acc = np.zeros(3 * plan.M, dtype=np.complex128)
        self._input_tail = np.zeros(plan.M - plan.R, dtype=np.complex128)
        self.cycle_index = 0

    @property
    def pending_tails(self) -> np.ndarray:
        """Accumulated output carried beyond the next emitted block."""
        return self._acc[self.plan.M:].copy()

    def reset(self) -> None:
        self._past.clear()
        self._acc[:] = 0
        self._input_tail[:] = 0
        self.cycle_index = 0


def filter_cycle(state: FilterState, input_block, plan: BlockFilterPlan | None = None) -> np.ndarray:
    """Push M new samples through the block filter, get M output samples.

    Per cycle the new overlap frames are transformed, multiplied with the
    stored block responses, inverse transformed, and their tails carried
    in the accumulator; the matured head block is returned.  At critical
    sampling cycle t returns response samples [t*M, (t+1)*M); with
    overlap the output lags one cycle (the first returned block is zero).
    """
    if plan is None:
        plan = state.plan
    elif plan is not state.plan:
        raise ValueError("state was initialized for a different plan")
    M, R, k = plan.M, plan.R, plan.k
    block = np.asarray(as_samples(input_block))
    if block.shape != (M,):
        raise ValueError(f"need exactly {M} samples per cycle")
    t = state.cycle_index
    ext = np.concatenate([state._input_tail, block])
    H, stride = plan.blocks, plan.block_stride
    base = (t - plan.latency_blocks) * M
    for f in range(t * k, (t + 1) * k):
        start = f * R - t * M  # frame offset within ext
        frame = ext[start:start + M] * state.analysis_taps
        state._past.append(np.fft.fft(frame, 2 * M))
        spec = np.zeros(2 * M, dtype=np.complex128)
        past = state._past
        for m in range(plan.n_blocks):
            j = m * stride
            if j >= len(past):
                break
            spec += H[m] * past[-1 - j]
        off = f * R - (M - R) - base
        state._acc[off:off + 2 * M] += np.fft.ifft(spec)
    out = state._acc[:M].copy()
    state._acc[:-M] = state._acc[M:]
    state._acc[-M:] = 0
    if M > R:
        state._input_tail = ext[-(M - R):].copy()
    state.cycle_index += 1
    return out


def filter_stream(x, plan: BlockFilterPlan, analysis_window=None) -> np.ndarray:
    """Concatenated filter_cycle output over a whole stream.

    Feeds the samples in M-sample cycles (zero-padding the tail and
    flushing), strips the engine latency, and returns the same full
    response as :func:`filter_signal`.
    """
    xp = as_samples(x)
    if xp.ndim != 1 or xp.size == 0:
        raise ValueError("expected a nonempty 1-D stream")
    M = plan.M
    n_out = xp.size + plan.L * M - 1
    state = FilterState(plan, analysis_window)
    latency = plan.latency_blocks
    total_cycles = -(-n_out // M) + latency
    padded = np.concatenate([xp, np.zeros(total_cycles * M - xp.size, dtype=np.complex128)])
    pieces = [filter_cycle(state, padded[t * M:(t + 1) * M]) for t in range(total_cycles)]
    return np.concatenate(pieces)[latency * M:latency * M + n_out]


def direct_convolve(x, h) -> np.ndarray:
    """Full linear convolution in the time domain, the transform-free oracle."""
    xp = as_samples(x)
    hp = as_samples(h)
    if xp.size == 0 or hp.size == 0:
        raise ValueError("both sequences must be nonempty")
    return np.convolve(xp, hp)


def doppler_grid(x, plan: BlockFilterPlan, n_freq_bins: int) -> np.ndarray:
    """Lag/frequency search grid from per-block partial filter outputs.

    For every candidate lag the L per-block matched-filter partials are
    collected, zero-padded to n_freq_bins, and transformed across the
    block index; squared magnitudes are returned as a (lags, bins) array.
    Bin 0 is the coherent sum, identical to the plain matched-filter
    power, and a frequency offset walks energy into higher bins.
    """
    if plan.L < 2:
        raise ValueError("need at least 2 blocks to resolve frequency")
    if n_freq_bins < plan.L:
        raise ValueError("n_freq_bins must be at least the block count")
    xp = as_samples(x)
    ns = plan.ref_length
    n_lags = xp.size - ns + 1
    if n_lags < 1:
        raise ValueError("input shorter than the reference")
    partials = np.empty((plan.L, n_lags), dtype=np.complex128)
    for m in range(plan.L):
        c = np.convolve(xp, plan.time_blocks[m])
        start = ns - 1 - m * plan.M
        # filter block m holds the reference tail first; index by chip
        # position instead so a positive offset lands in a positive bin
        partials[plan.L - 1 - m] = c[start:start + n_lags]
    grid = np.abs(np.fft.fft(partials, n_freq_bins, axis=0)) ** 2
    return grid.T


def excise(grid: StftGrid, threshold_factor: float) -> StftGrid:
    """Zero every bin that towers over its column's median power.

    A bin is cleared when its squared magnitude exceeds threshold_factor
    times the median squared magnitude of its column, which notches
    narrowband interference while leaving spread energy alone.  Detector
    normalization downstream must use the post-excision energy.
    """
    if threshold_factor <= 0:
        raise ValueError("threshold_factor must be positive")
    power = np.abs(grid.coeffs) ** 2
    median = np.median(power, axis=0, keepdims=True)
    keep = power <= threshold_factor * median
    return replace(grid, coeffs=np.where(keep, grid.coeffs, 0.0))


def complexity(N: int, M: int, R: int) -> dict[str, float]:
    """Complex-multiply counts for filtering an N-sample reference.

    Returns the four variants (plus a consistently-derived overlap-add
    count) as literal formula evaluations:

    * ``time_domain``: N^2
    * ``ola``: 2N(log2 N + 1), the overlap-add count with N-point
      transforms
    * ``ola_consistent``: 2N(log2 2N + 1), same bookkeeping as the block
      variants (2N-point transforms for linear convolution)
    * ``block_conventional``: (2MN/R)(log2 2M + LM/R)
    * ``block_simple``: (2MN/R)((1/2)(1 + R/M) log2 2M + LM/R), which
      pools the inverse transforms when the synthesis window is
      rectangular
    """
    if N < 1 or M < 1 or N % M:
        raise ValueError(f"block size {M} must divide reference length {N}")
    _check_ratio(M, R)
    L = N // M
    lg2m = math.log2(2 * M)
    per_hop = 2 * M * N / R
    return {
        "time_domain": float(N) ** 2,
        "ola": 2.0 * N * (math.log2(N) + 1),
        "ola_consistent": 2.0 * N * (math.log2(2 * N) + 1),
        "block_conventional": per_hop * (lg2m + L * M / R),
        "block_simple": per_hop * (0.5 * (1 + R / M) * lg2m + L * M / R),
    }
