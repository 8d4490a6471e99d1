"""PN sequences, windows, and overlap-add synthesis.

Building blocks for block-filter acquisition: m-sequence and Gold
preamble generation, rectangular and Kaiser windows with their
least-squares dual windows, STFT-grid synthesis (the modulator view of
the filter bank), chip upsampling, and simple file serialization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .block_filter import StftGrid

__all__ = [
    "PnSequence",
    "Window",
    "SampleStream",
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
]

# Preferred m-sequence pairs (feedback polynomials, octal) whose products
# give Gold sets with bounded cross-correlation.  Degree 6 is the pair
# x^6 + x + 1 and x^6 + x^5 + x^2 + x + 1.
_PREFERRED_PAIRS: dict[int, list[tuple[int, int]]] = {
    5: [(0o45, 0o75)],
    6: [(0o103, 0o147)],
    7: [(0o211, 0o217)],
}


@dataclass(frozen=True)
class PnSequence:
    """A bipolar pseudonoise sequence with chips in {+1, -1}."""

    chips: np.ndarray

    def __post_init__(self) -> None:
        chips = np.asarray(self.chips, dtype=np.float64)
        if chips.ndim != 1 or chips.size == 0:
            raise ValueError("chips must be a nonempty 1-D sequence")
        if not np.all(np.abs(chips) == 1.0):
            raise ValueError("every chip must be exactly +1 or -1")
        object.__setattr__(self, "chips", chips)

    @property
    def length(self) -> int:
        return int(self.chips.size)

    def normalized(self) -> np.ndarray:
        """Unit-energy copy of the chips, ||s|| = 1."""
        return self.chips / math.sqrt(self.chips.size)


@dataclass(frozen=True)
class Window:
    """A length-M tap vector with its kind tag ("rectangular", "kaiser(8)", ...)."""

    taps: np.ndarray
    kind: str

    def __post_init__(self) -> None:
        taps = np.asarray(self.taps, dtype=np.float64)
        if taps.ndim != 1 or taps.size == 0:
            raise ValueError("window taps must be a nonempty 1-D vector")
        if np.any(taps < 0):
            raise ValueError("window taps must be non-negative")
        object.__setattr__(self, "taps", taps)

    @property
    def length(self) -> int:
        return int(self.taps.size)

    @property
    def energy(self) -> float:
        """Sum of squared taps."""
        return float(np.sum(self.taps**2))

    @property
    def norm(self) -> float:
        return math.sqrt(self.energy)


@dataclass(frozen=True)
class SampleStream:
    """Finite complex baseband samples at `rate` samples per chip."""

    samples: np.ndarray
    rate: int = 1

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.complex128)
        if samples.ndim != 1:
            raise ValueError("samples must be 1-D")
        if self.rate < 1:
            raise ValueError("rate must be a positive integer")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def energy(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2))


def as_samples(x) -> np.ndarray:
    """Accept a SampleStream or any array-like and return complex samples."""
    return np.asarray(getattr(x, "samples", x), dtype=np.complex128)


def msequence(poly: int, degree: int) -> np.ndarray:
    """One period of a maximal-length sequence as +/-1 chips.

    `poly` is the feedback polynomial with the x^degree and x^0 bits set,
    e.g. 0o103 for x^6 + x + 1.  A Fibonacci shift register seeded with
    all ones produces the 2^degree - 1 chip period.
    """
    if degree < 2:
        raise ValueError("degree must be at least 2")
    length = (1 << degree) - 1
    mask = poly >> 1  # bit i selects a[n-1-i]
    state = length  # all-ones seed
    bits = np.empty(length, dtype=np.int64)
    for n in range(length):
        new = (state & mask).bit_count() & 1
        bits[n] = new
        state = ((state << 1) | new) & length
    return 1.0 - 2.0 * bits


def gold_sequence(degree: int = 6, pair_select: int = 0, shift: int = 0) -> np.ndarray:
    """A Gold sequence: chipwise product of a preferred m-sequence pair.

    `shift` cyclically rotates the second sequence, selecting one member
    of the Gold family.
    """
    if degree not in _PREFERRED_PAIRS:
        raise ValueError(
            f"degree {degree} not supported, have {sorted(_PREFERRED_PAIRS)}"
        )
    pairs = _PREFERRED_PAIRS[degree]
    if not 0 <= pair_select < len(pairs):
        raise ValueError(f"pair_select {pair_select} out of range for degree {degree}")
    pa, pb = pairs[pair_select]
    u = msequence(pa, degree)
    v = msequence(pb, degree)
    return u * np.roll(v, -shift)


def generate_gold_preamble(
    degree: int = 6,
    pair_select: int = 0,
    extend: bool = True,
    shift: int = 0,
    extend_chip: int = 0,
) -> PnSequence:
    """Gold preamble of length 2^degree - 1, or 2^degree when extended.

    Extension appends a copy of chip `extend_chip` (default the first
    chip), giving a power-of-two length that partitions evenly into
    blocks.
    """
    chips = gold_sequence(degree, pair_select, shift)
    if extend:
        chips = np.append(chips, chips[extend_chip])
    return PnSequence(chips)


def _i0(x: float) -> float:
    """Modified Bessel function I0 by its power series.

    Terms are added until they fall below 1e-16 of the running sum, which
    keeps the relative error under 1e-12 for the argument range used by
    Kaiser windows.
    """
    total = term = 1.0
    q = 0.25 * x * x
    k = 0
    while True:
        k += 1
        term *= q / (k * k)
        total += term
        if term <= 1e-16 * total:
            return total


def make_window(kind: str, M: int, beta: float = 8.0) -> Window:
    """Build a length-M analysis/reference window.

    kind "rectangular" gives all-ones taps; "kaiser" gives
    I0(beta*sqrt(1-(2n/(M-1)-1)^2)) / I0(beta).
    """
    if M < 1:
        raise ValueError("window length must be at least 1")
    if kind == "rectangular":
        return Window(np.ones(M), "rectangular")
    if kind == "kaiser":
        if beta < 0:
            raise ValueError("beta must be non-negative")
        if M == 1:
            return Window(np.ones(1), f"kaiser({beta:g})")
        n = np.arange(M)
        t = 2.0 * n / (M - 1) - 1.0
        denom = _i0(beta)
        taps = np.array([_i0(beta * math.sqrt(1.0 - ti * ti)) / denom for ti in t])
        return Window(taps, f"kaiser({beta:g})")
    raise ValueError(f"unknown window kind {kind!r}")


def dual_window(window: Window, hop: int) -> Window:
    """Least-squares dual of `window` for overlap-add at the given hop.

    g(j) = w(j) / sum_i w((j mod hop) + i*hop)^2, which makes g*w satisfy
    the constant-overlap-add condition at hop R.  For a rectangular
    window this reduces to a rectangular window scaled by R/M.
    """
    taps = window.taps
    M = taps.size
    if hop < 1 or M % hop:
        raise ValueError("hop must divide the window length")
    k = M // hop
    denom = np.sum(taps.reshape(k, hop) ** 2, axis=0)
    if np.any(denom == 0):
        raise ValueError("window has a dead phase, no dual exists")
    g = taps / np.tile(denom, k)
    return Window(g, f"dual-{window.kind}")


def synthesize(grid: "StftGrid | np.ndarray", synthesis_window: Window | None = None,
               hop: int | None = None) -> np.ndarray:
    """Overlap-add synthesis of a coefficient grid back to samples.

    Each column is inverse transformed, weighted by the synthesis window,
    and added at multiples of the hop, wrapping circularly over the
    L*M-sample span so that exactly L*M/R columns cover the signal.  With
    the dual of the analysis window this inverts `analyze` exactly.  A
    grid of data symbols turns this into a multicarrier modulator.
    """
    coeffs = np.asarray(getattr(grid, "coeffs", grid), dtype=np.complex128)
    if coeffs.ndim == 1:
        coeffs = coeffs[:, None]
    if coeffs.ndim != 2:
        raise ValueError("grid must be an M x (L*M/R) array")
    M, n_cols = coeffs.shape
    R = int(hop) if hop is not None else int(grid.R)
    if R < 1 or M % R:
        raise ValueError("hop must divide the block size")
    if synthesis_window is None:
        synthesis_window = dual_window(grid.window, R)
    g = np.asarray(getattr(synthesis_window, "taps", synthesis_window), dtype=np.float64)
    if g.size != M:
        raise ValueError("synthesis window length must equal the block size")
    total = n_cols * R
    blocks = np.fft.ifft(coeffs, axis=0) * g[:, None]
    out = np.zeros(total, dtype=np.complex128)
    idx = (np.arange(M)[:, None] + R * np.arange(n_cols)[None, :]) % total
    np.add.at(out, idx, blocks)
    return out


def upsample(samples, rate: int, pulse: np.ndarray | None = None) -> np.ndarray:
    """Expand each chip to `rate` samples through a chip pulse.

    The default pulse is rectangular, ones(rate)/sqrt(rate), which
    preserves total energy.
    """
    if rate < 1:
        raise ValueError("rate must be a positive integer")
    x = as_samples(samples)
    if pulse is None:
        pulse = np.ones(rate) / math.sqrt(rate)
    pulse = np.asarray(pulse)
    if pulse.size != rate:
        raise ValueError("pulse length must equal the upsampling rate")
    return (x[:, None] * pulse[None, :]).ravel()


def save_samples(path, samples) -> None:
    """Write complex samples as interleaved little-endian float64 pairs."""
    np.asarray(as_samples(samples), dtype="<c16").tofile(path)


def load_samples(path) -> np.ndarray:
    """Read complex samples written by `save_samples`."""
    return np.fromfile(path, dtype="<c16").astype(np.complex128)


def save_text(path, values) -> None:
    """Write a real-valued sequence or window as one value per line."""
    np.savetxt(path, np.asarray(values, dtype=np.float64), fmt="%.17g")


def load_text(path) -> np.ndarray:
    return np.loadtxt(path, dtype=np.float64, ndmin=1)
