"""Tests for the Monte Carlo experiment harness.

Heavy statistical validation lives in the acceptance suite; here the
focus is the experiment contract: deterministic reruns, the CSV and JSON
shapes, threshold calibration behaviour, and agreement of the analytic
reference columns with the closed forms.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from blockacq import (
    CSV_HEADER,
    CalibrationError,
    ChannelSpec,
    CurvePoint,
    ExperimentSpec,
    calibrate_threshold,
    complexity,
    complexity_to_csv,
    curves_to_csv,
    gamma_from_pfa,
    measure_fa,
    p_d,
    p_m_approx,
    p_m_exact,
    run_experiment,
    spec_from_json,
    spec_to_json,
)

FLAT = ChannelSpec("rayleigh_flat")


def small_spec(**overrides) -> ExperimentSpec:
    defaults = dict(
        channel=FLAT,
        M=32,
        R=32,
        N=64,
        snr_grid_db=(0.0, 10.0),
        trials=50,
        base_seed=7,
    )
    defaults.update(overrides)
    return ExperimentSpec(**defaults)


class TestExperimentSpec:
    def test_accepts_supported_preamble_lengths(self):
        for N, M in ((32, 32), (64, 16), (128, 64)):
            spec = small_spec(N=N, M=M, R=M)
            assert spec.N == N

    def test_rejects_bad_geometry(self):
        with pytest.raises(ValueError):
            small_spec(N=48)
        with pytest.raises(ValueError):
            small_spec(M=24, R=24)  # does not divide 64
        with pytest.raises(ValueError):
            small_spec(M=32, R=12)  # ratio not a power of two
        with pytest.raises(ValueError):
            small_spec(M=32, R=64)  # ratio below one

    def test_rejects_bad_bookkeeping(self):
        with pytest.raises(TypeError):
            small_spec(channel="rayleigh_flat")
        with pytest.raises(ValueError):
            small_spec(snr_grid_db=())
        with pytest.raises(ValueError):
            small_spec(trials=0)
        with pytest.raises(ValueError):
            small_spec(base_seed=-1)
        with pytest.raises(ValueError):
            small_spec(target_pfa=0.0)

    def test_grid_coerced_to_floats(self):
        spec = small_spec(snr_grid_db=(0, 5, 10))
        assert spec.snr_grid_db == (0.0, 5.0, 10.0)
        assert all(isinstance(s, float) for s in spec.snr_grid_db)

    def test_json_round_trip(self):
        spec = small_spec(
            channel=ChannelSpec("rician", kappa=4.0),
            analysis_window="kaiser",
            window_beta=6.5,
        )
        assert spec_from_json(spec_to_json(spec)) == spec

    def test_json_rejects_unknown_fields(self):
        text = spec_to_json(small_spec())
        with pytest.raises(ValueError, match="unknown experiment"):
            spec_from_json(text.replace('"M"', '"emm"'))
        with pytest.raises(ValueError):
            spec_from_json("[1, 2]")
        with pytest.raises(ValueError):
            spec_from_json('{"channel": "rayleigh_flat"}')


class TestRunExperiment:
    def test_deterministic_rerun(self):
        spec = small_spec()
        first = curves_to_csv(run_experiment(spec))
        second = curves_to_csv(run_experiment(spec))
        assert first == second

    def test_noiseless_point_is_certain(self):
        spec = small_spec(
            channel=ChannelSpec("awgn"), snr_grid_db=(math.inf,), trials=3
        )
        (point,) = run_experiment(spec)
        assert point.p_d_sim == 1.0
        assert point.p_m_sim == 1.0
        assert point.p_d_theory == 1.0
        assert point.p_m_theory == 1.0

    def test_binomial_error_column(self):
        spec = small_spec(snr_grid_db=(10.0,))
        (point,) = run_experiment(spec)
        want = math.sqrt(point.p_d_sim * (1 - point.p_d_sim) / spec.trials)
        assert point.p_d_err == pytest.approx(want, abs=1e-15)
        assert point.trials == spec.trials

    def test_flat_channel_leaves_second_tap_empty(self):
        spec = small_spec(snr_grid_db=(10.0,))
        (point,) = run_experiment(spec)
        assert point.p_d2_sim is None
        assert point.p_m2_sim is None

    def test_two_tap_columns_dominate_single_tap(self):
        spec = small_spec(
            channel=ChannelSpec("rayleigh_2tap", tap_separation=2),
            snr_grid_db=(8.0,),
            trials=80,
        )
        (point,) = run_experiment(spec)
        # Accepting either tap position can only add successes.
        assert point.p_d2_sim >= point.p_d_sim
        assert point.p_m2_sim >= point.p_m_sim

    def test_theory_columns_match_closed_forms(self):
        spec = small_spec(snr_grid_db=(6.0,), trials=2)
        gamma = gamma_from_pfa(spec.target_pfa, spec.N)
        mu = 10.0 ** (6.0 / 10.0)
        (exact,) = run_experiment(spec, pm_method="exact")
        assert exact.p_d_theory == pytest.approx(p_d("rayleigh", mu, gamma, 64))
        assert exact.p_m_theory == pytest.approx(p_m_exact("rayleigh", mu, 64))
        (approx,) = run_experiment(spec, pm_method="approximate")
        assert approx.p_m_theory == pytest.approx(p_m_approx("rayleigh", mu))
        with pytest.raises(ValueError):
            run_experiment(spec, pm_method="guess")

    def test_rician_theory_uses_constant_part_convention(self):
        kappa = 4.0
        spec = small_spec(
            channel=ChannelSpec("rician", kappa=kappa), snr_grid_db=(6.0,), trials=2
        )
        gamma = gamma_from_pfa(spec.target_pfa, spec.N)
        mu = 10.0 ** (6.0 / 10.0)
        mu_c = mu * kappa / (kappa + 1.0)
        (point,) = run_experiment(spec)
        assert point.p_d_theory == pytest.approx(
            p_d("rician", mu_c, gamma, 64, kappa)
        )

    def test_threshold_multiplier_moves_simulated_rates_only(self):
        spec = small_spec(snr_grid_db=(10.0,), trials=120)
        (plain,) = run_experiment(spec)
        (strict,) = run_experiment(spec, threshold_multiplier=50.0)
        assert strict.p_d_sim < plain.p_d_sim
        assert strict.p_d_theory == plain.p_d_theory
        # the max position does not depend on the threshold
        assert strict.p_m_sim == plain.p_m_sim


class TestCsv:
    def test_header_and_shape(self):
        spec = small_spec()
        text = curves_to_csv(run_experiment(spec))
        lines = text.strip().split("\n")
        assert lines[0] == CSV_HEADER
        assert len(lines) == 1 + len(spec.snr_grid_db)
        assert all(len(line.split(",")) == 10 for line in lines[1:])

    def test_values_round_trip_through_text(self):
        spec = small_spec(snr_grid_db=(3.0,), trials=30)
        (point,) = run_experiment(spec)
        row = curves_to_csv([point]).strip().split("\n")[1].split(",")
        assert float(row[0]) == point.snr_db
        assert float(row[1]) == point.p_d_sim
        assert float(row[2]) == point.p_d_err
        assert math.isnan(float(row[5])) and math.isnan(float(row[6]))
        assert float(row[7]) == point.p_d_theory
        assert int(row[9]) == point.trials

    def test_complexity_csv_matches_dict(self):
        text = complexity_to_csv([(64, 64, 64), (64, 8, 4)])
        lines = text.strip().split("\n")
        assert lines[0] == "variant,N,M,R,cm_count"
        assert len(lines) == 1 + 2 * 5
        for line in lines[1:]:
            variant, N, M, R, count = line.split(",")
            assert float(count) == complexity(int(N), int(M), int(R))[variant]


class TestCurvePoint:
    def test_validation(self):
        kwargs = dict(
            snr_db=0.0,
            p_d_sim=0.5,
            p_d_err=0.1,
            p_m_sim=0.5,
            p_m_err=0.1,
            p_d2_sim=None,
            p_m2_sim=None,
            p_d_theory=0.5,
            p_m_theory=0.5,
            trials=10,
        )
        CurvePoint(**kwargs)
        with pytest.raises(ValueError):
            CurvePoint(**{**kwargs, "trials": 0})
        with pytest.raises(ValueError):
            CurvePoint(**{**kwargs, "p_d_sim": 1.5})
        with pytest.raises(ValueError):
            CurvePoint(**{**kwargs, "p_m2_sim": -0.1})


class TestFalseAlarmMeasurement:
    def test_huge_multiplier_silences_detector(self):
        spec = small_spec()
        assert measure_fa(spec, 100, threshold_multiplier=1e9) == 0.0

    def test_rectangular_critical_rate_near_target(self):
        # Uncalibrated rectangular critically sampled filtering should sit
        # close to the design rate already.
        spec = small_spec()
        fa = measure_fa(spec, 4000)
        assert 0.0085 < fa < 0.0115

    def test_validation(self):
        with pytest.raises(ValueError):
            measure_fa(small_spec(), 0)


class TestCalibration:
    def test_rectangular_critical_multiplier_near_one(self):
        got = calibrate_threshold(small_spec(), noise_trials=10_000)
        assert 0.85 < got < 1.15

    def test_analysis_window_needs_smaller_threshold(self):
        spec = small_spec(M=64, R=64, analysis_window="kaiser")
        got = calibrate_threshold(spec, noise_trials=10_000)
        assert got < 0.5

    def test_overlap_needs_larger_threshold(self):
        spec = small_spec(M=64, R=16)
        got = calibrate_threshold(spec, noise_trials=10_000)
        assert got > 5.0

    def test_calibrated_rate_hits_target(self):
        spec = small_spec()
        mult = calibrate_threshold(spec, noise_trials=10_000, tolerance=0.05)
        fa = measure_fa(spec, 4000, threshold_multiplier=mult)
        assert fa == pytest.approx(spec.target_pfa, rel=0.25)

    def test_unreachable_target_raises(self):
        spec = small_spec(target_pfa=1e-12)
        with pytest.raises(CalibrationError):
            calibrate_threshold(spec, noise_trials=10_000)

    def test_validation(self):
        with pytest.raises(ValueError):
            calibrate_threshold(small_spec(), noise_trials=5000)
        with pytest.raises(ValueError):
            calibrate_threshold(small_spec(), tolerance=0.0)
