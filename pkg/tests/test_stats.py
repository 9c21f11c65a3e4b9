import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tvqc.channels import TruncatedNormal, sample_truncated_normal
from tvqc.errors import DomainError, FitError, SchemaError, UsageError
from tvqc.rng import RngStream
from tvqc.stats import (CorrelationReport, DecayCurve, T1Series,
                        bootstrap_ci, classify_correlation,
                        correlation_report, default_delay_grid, fit_t1_decay,
                        load_decay_curve, load_t1_series, pearson,
                        save_decay_curve, save_report, save_t1_series,
                        simulate_relaxation_experiment, summary_stats)


def make_series(qubit_id, values):
    values = np.asarray(values, dtype=float)
    return T1Series(qubit_id, np.arange(values.size) * 120.0, values)


class TestRelaxationExperiment:
    def test_default_grid(self):
        grid = default_delay_grid(80.0)
        assert grid.size == 20
        assert grid[0] == 1.0 and grid[-1] == 160.0

    def test_zero_delay_always_excited(self):
        curve = simulate_relaxation_experiment(
            80.0, 4000, [0.0, 10.0, 20.0], RngStream(1))
        assert curve.excited_counts[0] == 4000

    def test_survival_at_t1_near_inverse_e(self):
        curve = simulate_relaxation_experiment(
            80.0, 4000, [1.0, 80.0, 160.0], RngStream(2))
        p_hat = curve.excited_counts[1] / 4000
        margin = 4 * math.sqrt(math.exp(-1) * (1 - math.exp(-1)) / 4000)
        assert abs(p_hat - math.exp(-1)) < margin

    def test_domain_checks(self):
        with pytest.raises(DomainError):
            simulate_relaxation_experiment(-1.0, 100, [1.0], RngStream(0))
        with pytest.raises(UsageError):
            simulate_relaxation_experiment(80.0, 0, [1.0], RngStream(0))


class TestFit:
    def test_noiseless_exact_recovery(self):
        delays = default_delay_grid(80.0)
        counts = 1e9 * np.exp(-delays / 80.0)
        curve = DecayCurve(delays, int(1e9), counts)
        t1_hat, stderr = fit_t1_decay(curve)
        assert abs(t1_hat - 80.0) / 80.0 < 1e-6
        assert stderr < 1e-3

    def test_fit_is_fixed_point_on_own_curve(self):
        delays = default_delay_grid(120.0)
        counts = 4000 * (0.97 * np.exp(-delays / 120.0) + 0.02)
        first, _ = fit_t1_decay(DecayCurve(delays, 4000, counts))
        resynth = 4000 * (0.97 * np.exp(-delays / first) + 0.02)
        second, _ = fit_t1_decay(DecayCurve(delays, 4000, resynth))
        assert abs(second - first) / first < 1e-9

    def test_recovery_rate_at_4000_shots(self):
        hits = 0
        reps = 150
        for k in range(reps):
            curve = simulate_relaxation_experiment(
                80.0, 4000, default_delay_grid(80.0), RngStream(1000, k))
            t1_hat, _ = fit_t1_decay(curve)
            hits += abs(t1_hat - 80.0) / 80.0 < 0.05
        assert hits / reps >= 0.95

    def test_spam_offset_small_bias(self):
        delays = default_delay_grid(80.0)
        estimates = []
        for k in range(200):
            gen = RngStream(2000, k).generator()
            p = 0.95 * np.exp(-delays / 80.0) + 0.03
            counts = gen.binomial(4000, p)
            t1_hat, _ = fit_t1_decay(DecayCurve(delays, 4000, counts))
            estimates.append(t1_hat)
        assert abs(np.mean(estimates) - 80.0) / 80.0 < 0.02

    def test_too_few_points(self):
        with pytest.raises(UsageError):
            fit_t1_decay(DecayCurve(np.array([1.0, 2.0, 3.0]), 100,
                                    np.array([90, 80, 70])))

    def test_degenerate_counts(self):
        with pytest.raises(FitError):
            fit_t1_decay(DecayCurve(np.arange(1.0, 6.0), 100,
                                    np.full(5, 50)))


class TestPearson:
    def test_perfect_positive(self):
        x = np.arange(10.0)
        assert pearson(x, x) == pytest.approx(1.0, abs=1e-12)

    def test_perfect_negative_affine(self):
        x = np.arange(10.0)
        assert pearson(x, -2.0 * x + 7.0) == pytest.approx(-1.0, abs=1e-12)

    def test_sampling_distribution(self):
        hits = 0
        trials = 200
        rho = 0.5
        for k in range(trials):
            gen = RngStream(3000, k).generator()
            x = gen.standard_normal(400)
            y = rho * x + math.sqrt(1 - rho * rho) * gen.standard_normal(400)
            hits += abs(pearson(x, y) - rho) < 0.1
        assert hits / trials >= 0.95

    def test_zero_variance_error(self):
        with pytest.raises(DomainError):
            pearson(np.ones(5), np.arange(5.0))

    @given(a=st.floats(0.1, 10.0), b=st.floats(-5.0, 5.0))
    @settings(max_examples=25, deadline=None)
    def test_affine_invariance(self, a, b):
        gen = RngStream(77).generator()
        x = gen.standard_normal(50)
        y = gen.standard_normal(50)
        r = pearson(x, y)
        assert pearson(a * x + b, y) == pytest.approx(r, abs=1e-9)
        assert pearson(-a * x + b, y) == pytest.approx(-r, abs=1e-9)

    def test_symmetry(self):
        gen = RngStream(78).generator()
        x, y = gen.standard_normal(60), gen.standard_normal(60)
        assert pearson(x, y) == pearson(y, x)


class TestBootstrap:
    def test_identical_series_collapse(self):
        x = np.arange(50.0)
        lo, hi = bootstrap_ci(x, x, rng=RngStream(1))
        assert lo == 1.0 and hi == 1.0

    def test_interval_contains_point_estimate(self):
        gen = RngStream(4).generator()
        x = gen.standard_normal(200)
        y = 0.6 * x + gen.standard_normal(200)
        r = pearson(x, y)
        lo, hi = bootstrap_ci(x, y, rng=RngStream(5))
        assert lo <= r <= hi

    def test_coverage_of_zero_for_independent_series(self):
        trials = 200
        contains = 0
        for k in range(trials):
            gen = RngStream(4000, k).generator()
            x = gen.standard_normal(400)
            y = gen.standard_normal(400)
            lo, hi = bootstrap_ci(x, y, rng=RngStream(4001, k))
            contains += lo <= 0.0 <= hi
        assert 0.90 <= contains / trials <= 0.99

    def test_strong_correlation_stays_above_threshold(self):
        gen = RngStream(6).generator()
        x = gen.standard_normal(400)
        y = 0.9 * x + math.sqrt(1 - 0.81) * gen.standard_normal(400)
        lo, _ = bootstrap_ci(x, y, rng=RngStream(7))
        assert lo > 0.6

    def test_deterministic_given_seed(self):
        gen = RngStream(8).generator()
        x = gen.standard_normal(100)
        y = gen.standard_normal(100)
        assert bootstrap_ci(x, y, rng=RngStream(9)) == \
            bootstrap_ci(x, y, rng=RngStream(9))

    def test_minimum_resamples_enforced(self):
        x = np.arange(20.0)
        with pytest.raises(UsageError):
            bootstrap_ci(x, x, resamples=100, rng=RngStream(1))


class TestClassification:
    def test_borderline_annotation(self):
        v = classify_correlation(0.53, (0.444, 0.6))
        assert v.label == "negligible" and v.borderline

    def test_clearly_significant(self):
        v = classify_correlation(0.95, (0.9, 0.98))
        assert v.label == "significant"

    def test_clearly_negligible(self):
        v = classify_correlation(0.05, (-0.05, 0.15))
        assert v.label == "negligible" and not v.borderline

    def test_negative_borderline(self):
        v = classify_correlation(-0.5, (-0.65, -0.3))
        assert v.label == "negligible" and v.borderline

    def test_invalid_interval(self):
        with pytest.raises(UsageError):
            classify_correlation(0.1, (0.5, 0.2))


class TestCorrelationReport:
    def test_pair_count(self):
        gen = RngStream(10).generator()
        series = [make_series(f"Q{k}", 50.0 + gen.standard_normal(40))
                  for k in range(5)]
        report = correlation_report(series, seed=1)
        assert len(report.pairs) == 10

    def test_identical_series_fully_correlated(self):
        base = 50.0 + RngStream(11).generator().standard_normal(40)
        series = [make_series(f"Q{k}", base) for k in range(3)]
        report = correlation_report(series, seed=2)
        for pair in report.pairs:
            assert pair.r == pytest.approx(1.0, abs=1e-12)
            assert pair.verdict.label == "significant"

    def test_independent_draws_have_negligible_correlation(self):
        model = TruncatedNormal(80.0, 20.0)
        series = [make_series(f"Q{k}",
                              sample_truncated_normal(model,
                                                      RngStream(12, k),
                                                      size=400))
                  for k in range(5)]
        report = correlation_report(series, seed=3)
        assert report.all_negligible()
        assert all(abs(p.r) < 0.1 for p in report.pairs)

    def test_length_mismatch(self):
        with pytest.raises(UsageError):
            correlation_report([make_series("A", np.arange(1, 11.0)),
                                make_series("B", np.arange(1, 12.0))])


class TestSummaryStats:
    def test_constant_series(self):
        mu, sigma, cv = summary_stats(make_series("Q0", np.full(6, 42.0)))
        assert (mu, sigma, cv) == (42.0, 0.0, 0.0)

    def test_hand_arithmetic(self):
        mu, sigma, cv = summary_stats(make_series("Q0", [2.0, 4.0]))
        assert mu == 3.0
        assert sigma == pytest.approx(math.sqrt(2.0), abs=1e-12)
        assert cv == pytest.approx(0.4714045207910317, abs=1e-12)

    def test_truncated_normal_cv(self):
        model = TruncatedNormal(80.0, 20.0)
        draws = sample_truncated_normal(model, RngStream(13), size=10_000)
        _, _, cv = summary_stats(make_series("Q0", draws))
        assert abs(cv - 0.24992470943506703) / 0.25 < 0.03


class TestCsvSchemas:
    def test_t1_round_trip(self, tmp_path):
        gen = RngStream(14).generator()
        series = [make_series(f"Q{k}", 60.0 + gen.standard_normal(25))
                  for k in range(5)]
        path = tmp_path / "t1.csv"
        save_t1_series(series, path)
        loaded = load_t1_series(path)
        assert len(loaded) == 5
        for a, b in zip(series, loaded):
            assert a.qubit_id == b.qubit_id
            assert np.array_equal(a.timestamps, b.timestamps)
            assert np.array_equal(a.t1_values, b.t1_values)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(SchemaError):
            load_t1_series(path)

    def test_header_only_warns(self, tmp_path):
        path = tmp_path / "header.csv"
        path.write_text("timestamp,qubit_id,t1_us\n")
        with pytest.warns(UserWarning):
            assert load_t1_series(path) == []

    def test_bad_row_reports_line_number(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("timestamp,qubit_id,t1_us\n0.0,Q0,80.0\n"
                        "1.0,Q0,not-a-number\n")
        with pytest.raises(SchemaError, match="row 3"):
            load_t1_series(path)

    def test_negative_t1_rejected(self, tmp_path):
        path = tmp_path / "neg.csv"
        path.write_text("timestamp,qubit_id,t1_us\n0.0,Q0,-5.0\n")
        with pytest.raises(SchemaError, match="row 2"):
            load_t1_series(path)

    def test_report_schema(self, tmp_path):
        series = [make_series("Q0", np.arange(1, 41.0)),
                  make_series("Q1", np.arange(2, 42.0))]
        report = correlation_report(series, seed=4)
        path = tmp_path / "report.csv"
        save_report(report, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "qubit_i,qubit_j,r,ci_low,ci_high,verdict"
        assert len(lines) == 2

    def test_decay_round_trip(self, tmp_path):
        curve = simulate_relaxation_experiment(80.0, 4000,
                                               default_delay_grid(80.0),
                                               RngStream(15))
        path = tmp_path / "decay.csv"
        save_decay_curve(curve, path)
        loaded = load_decay_curve(path)
        assert np.array_equal(loaded.delays, curve.delays)
        assert np.array_equal(loaded.excited_counts, curve.excited_counts)
        assert loaded.shots == curve.shots

    def test_decay_inconsistent_shots(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("delay_us,shots,excited_count\n1.0,100,90\n"
                        "2.0,200,80\n")
        with pytest.raises(SchemaError, match="row 3"):
            load_decay_curve(path)
