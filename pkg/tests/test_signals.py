"""Tests for PN sequences, windows, and sample I/O."""

import math

import numpy as np
import pytest

from blockacq import (
    PnSequence,
    SampleStream,
    Window,
    analyze,
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


def circular_correlation(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Brute-force circular cross-correlation, one value per shift."""
    n = a.size
    return np.array([float(np.dot(a, np.roll(b, -tau))) for tau in range(n)])


@pytest.mark.parametrize("poly,degree", [(0o45, 5), (0o103, 6), (0o211, 7)])
def test_msequence_period_chips_balance(poly, degree):
    seq = msequence(poly, degree)
    n = 2**degree - 1
    assert seq.shape == (n,)
    assert set(np.unique(seq)) == {-1.0, 1.0}
    # one more +1 chip than -1 in a maximal-length period
    assert abs(float(seq.sum())) == 1.0


@pytest.mark.parametrize("poly,degree", [(0o45, 5), (0o103, 6)])
def test_msequence_ideal_autocorrelation(poly, degree):
    seq = msequence(poly, degree)
    corr = circular_correlation(seq, seq)
    assert corr[0] == seq.size
    assert np.all(corr[1:] == -1.0)


def test_msequence_shift_distinct_phases():
    seq = msequence(0o103, 6)
    shifted = {tuple(np.roll(seq, s)) for s in range(seq.size)}
    assert len(shifted) == seq.size


def test_gold_cross_correlation_three_valued():
    # preferred pair for degree 6: correlations take values {-1, -t, t-2}
    # with t = 2^((d+2)/2) + 1 = 17
    u = msequence(0o103, 6)
    v = msequence(0o147, 6)
    values = set(circular_correlation(u, v))
    assert values <= {-1.0, -17.0, 15.0}
    assert len(values) == 3


def test_gold_sequence_offpeak_autocorrelation_bounded():
    g = gold_sequence(6, 0, 0)
    corr = circular_correlation(g, g)
    assert corr[0] == 63
    assert set(corr[1:]) <= {-1.0, -17.0, 15.0}


def test_gold_sequence_shifts_distinct():
    family = {tuple(gold_sequence(6, 0, s)) for s in range(5)}
    assert len(family) == 5
    for seq in family:
        assert len(seq) == 63
        assert set(seq) == {-1.0, 1.0}


def test_gold_preamble_extension():
    p = generate_gold_preamble()
    assert p.length == 64
    base = gold_sequence(6, 0, 0)
    assert np.array_equal(p.chips[:63], base)
    assert p.chips[63] == p.chips[0]

    plain = generate_gold_preamble(extend=False)
    assert plain.length == 63

    s = p.normalized()
    assert math.isclose(float(np.sum(s**2)), 1.0, rel_tol=1e-12)


def test_pn_sequence_validation():
    with pytest.raises(ValueError):
        PnSequence(np.array([1.0, 0.5, -1.0]))
    with pytest.raises(ValueError):
        PnSequence(np.array([]))


def test_make_window_rectangular():
    w = make_window("rectangular", 16)
    assert np.array_equal(w.taps, np.ones(16))
    assert w.kind == "rectangular"
    assert w.energy == 16.0
    assert w.norm == 4.0


@pytest.mark.parametrize("M", [8, 64])
@pytest.mark.parametrize("beta", [0.0, 5.0, 8.0])
def test_make_window_kaiser_matches_numpy(M, beta):
    w = make_window("kaiser", M, beta)
    np.testing.assert_allclose(w.taps, np.kaiser(M, beta), rtol=1e-10, atol=1e-14)


def test_make_window_edge_cases():
    assert np.array_equal(make_window("kaiser", 1, 8.0).taps, np.ones(1))
    with pytest.raises(ValueError):
        make_window("hamming", 16)
    with pytest.raises(ValueError):
        make_window("kaiser", 16, beta=-1.0)
    with pytest.raises(ValueError):
        make_window("rectangular", 0)


def test_window_validation():
    with pytest.raises(ValueError):
        Window(np.array([1.0, -0.5]), "bad")
    with pytest.raises(ValueError):
        Window(np.array([]), "empty")


def test_dual_window_overlap_add_identity():
    # w * dual(w) tiles to exactly one at the design hop
    for hop in (4, 8, 16):
        w = make_window("kaiser", 32, 8.0)
        g = dual_window(w, hop)
        prod = w.taps * g.taps
        acc = np.zeros(hop)
        for i in range(32 // hop):
            acc += prod[i * hop:(i + 1) * hop]
        np.testing.assert_allclose(acc, 1.0, rtol=1e-12)


def test_dual_of_rectangular_at_critical_hop():
    w = make_window("rectangular", 16)
    g = dual_window(w, 16)
    np.testing.assert_allclose(g.taps, np.ones(16), rtol=1e-12)


@pytest.mark.parametrize("M,R", [(16, 16), (16, 4), (32, 8)])
def test_analyze_synthesize_roundtrip(M, R):
    rng = np.random.default_rng(11)
    x = rng.standard_normal(50) + 1j * rng.standard_normal(50)
    w = make_window("kaiser", M, 8.0)
    grid = analyze(x, w, M, R)
    xr = synthesize(grid, dual_window(w, R))
    np.testing.assert_allclose(xr[:50], x, atol=1e-10)
    np.testing.assert_allclose(xr[50:], 0.0, atol=1e-10)


def test_analyze_column_content():
    # column a holds the transform of the windowed frame starting at a*R,
    # taken circularly over the padded length
    rng = np.random.default_rng(5)
    x = rng.standard_normal(40) + 1j * rng.standard_normal(40)
    M, R = 16, 4
    w = make_window("kaiser", M, 8.0)
    grid = analyze(x, w, M, R)
    total = grid.L * M
    xp = np.concatenate([x, np.zeros(total - x.size)])
    assert grid.coeffs.shape == (M, grid.L * M // R)
    for a in range(grid.n_columns):
        frame = xp[(a * R + np.arange(M)) % total] * w.taps
        np.testing.assert_allclose(grid.coeffs[:, a], np.fft.fft(frame), atol=1e-12)


def test_sample_file_roundtrip_and_layout(tmp_path):
    rng = np.random.default_rng(7)
    x = rng.standard_normal(100) + 1j * rng.standard_normal(100)
    path = tmp_path / "x.c128"
    save_samples(path, x)
    assert path.stat().st_size == 100 * 16
    y = load_samples(path)
    assert np.array_equal(x, y)
    # interleaved little-endian float64 pairs: re0, im0, re1, im1, ...
    raw = np.fromfile(path, dtype="<f8")
    assert np.array_equal(raw[0::2], x.real)
    assert np.array_equal(raw[1::2], x.imag)


def test_text_roundtrip(tmp_path):
    w = make_window("kaiser", 16, 8.0)
    path = tmp_path / "w.txt"
    save_text(path, w.taps)
    back = load_text(path)
    assert np.array_equal(back, w.taps)


def test_upsample_rectangular_pulse():
    out = upsample(np.array([1.0, -1.0]), 2)
    np.testing.assert_allclose(out, np.array([1, 1, -1, -1]) / math.sqrt(2))
    # energy preserved by the default pulse
    x = np.array([1.0, -1.0, 1.0])
    assert math.isclose(float(np.sum(np.abs(upsample(x, 4)) ** 2)), 3.0, rel_tol=1e-12)
    assert np.array_equal(upsample(x, 1), x.astype(np.complex128))


def test_upsample_validation():
    with pytest.raises(ValueError):
        upsample(np.ones(4), 0)
    with pytest.raises(ValueError):
        upsample(np.ones(4), 2, pulse=np.ones(3))


def test_sample_stream():
    s = SampleStream(np.array([3.0, 4.0j]), rate=2)
    assert len(s) == 2
    assert math.isclose(s.energy, 25.0)
    with pytest.raises(ValueError):
        SampleStream(np.ones((2, 2)))
    with pytest.raises(ValueError):
        SampleStream(np.ones(4), rate=0)


def test_as_samples_accepts_streams_and_arrays():
    s = SampleStream(np.array([1.0, 2.0]))
    assert np.array_equal(as_samples(s), np.array([1.0 + 0j, 2.0 + 0j]))
    assert as_samples([1, 2]).dtype == np.complex128
