import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats as sps

from tvqc.channels import (DampingPair, DecoherenceSpec, KrausSet, PauliDist,
                           TruncatedNormal, block_pauli_probs, cta_depol_ad,
                           cta_depol_apd, damping_gamma, kraus_ad, kraus_apd,
                           pta_probs_ad, pta_probs_apd, sample_block_error,
                           sample_truncated_normal, scattering_lambda,
                           solve_t_algo, truncated_normal_pdf)
from tvqc.errors import DomainError, UsageError
from tvqc.rng import RngStream

# strategy for valid (t1, t2, t) triples with t2 <= 2 t1
_t1s = st.floats(1.0, 500.0)
_ratios = st.floats(0.05, 1.0)  # t2 = ratio * 2 * t1
_ts = st.floats(0.0, 200.0)


class TestDampingMaps:
    def test_gamma_zero_time(self):
        assert damping_gamma(100.0, 0.0) == 0.0

    def test_gamma_full_decay_limit(self):
        assert damping_gamma(100.0, 1e7) > 1 - 1e-12

    def test_gamma_direct_value(self):
        assert damping_gamma(100.0, 1.0) == pytest.approx(
            0.0099501662508319464, abs=1e-15)

    def test_gamma_domain_error(self):
        with pytest.raises(DomainError):
            damping_gamma(0.0, 1.0)
        with pytest.raises(DomainError):
            damping_gamma(-5.0, 1.0)

    def test_lambda_ramsey_limit(self):
        assert scattering_lambda(100.0, 200.0, 37.0) == 0.0

    def test_lambda_zero_time(self):
        assert scattering_lambda(100.0, 100.0, 0.0) == 0.0

    def test_lambda_direct_value(self):
        assert scattering_lambda(100.0, 100.0, 10.0) == pytest.approx(
            0.095162581964040427, abs=1e-15)

    def test_lambda_rejects_t2_beyond_ramsey(self):
        with pytest.raises(DomainError):
            scattering_lambda(100.0, 201.0, 5.0)

    @given(t1=_t1s, t_lo=_ts, t_hi=_ts)
    def test_gamma_monotone_in_time(self, t1, t_lo, t_hi):
        lo, hi = sorted((t_lo, t_hi))
        assert damping_gamma(t1, lo) <= damping_gamma(t1, hi)


class TestTruncatedNormal:
    def test_pdf_zero_below_support(self):
        model = TruncatedNormal(80.0, 20.0)
        assert truncated_normal_pdf(-1.0, model) == 0.0

    def test_pdf_half_normal_value(self):
        model = TruncatedNormal(0.0, 1.0)
        assert truncated_normal_pdf(0.0, model) == pytest.approx(
            0.79788456080286536, abs=1e-12)

    def test_pdf_normalization(self):
        model = TruncatedNormal(80.0, 20.0)
        total, _ = integrate.quad(lambda x: truncated_normal_pdf(x, model),
                                  0.0, np.inf, limit=200)
        assert total == pytest.approx(1.0, abs=1e-9)

    def test_pdf_requires_positive_sigma(self):
        with pytest.raises(DomainError):
            truncated_normal_pdf(1.0, TruncatedNormal(80.0, 0.0))

    def test_sampler_degenerate_sigma(self):
        assert sample_truncated_normal(TruncatedNormal(80.0, 0.0),
                                       RngStream(1)) == 80.0

    def test_sampler_mean_against_analytic(self):
        model = TruncatedNormal(80.0, 20.0)
        draws = sample_truncated_normal(model, RngStream(2), size=1_000_000)
        assert draws.min() >= 0.0
        # analytic truncated-normal mean
        assert abs(draws.mean() - 80.00267668928937) / 80.0 < 0.005

    def test_sampler_ks_statistic(self):
        model = TruncatedNormal(80.0, 20.0)
        draws = np.sort(sample_truncated_normal(model, RngStream(3),
                                                size=1_000_000))
        cdf = sps.truncnorm.cdf(draws, -4.0, np.inf, loc=80.0, scale=20.0)
        n = draws.size
        ecdf_hi = np.arange(1, n + 1) / n
        ecdf_lo = np.arange(0, n) / n
        ks = max(np.abs(ecdf_hi - cdf).max(), np.abs(cdf - ecdf_lo).max())
        assert ks < 0.002

    def test_sampler_reproducible(self):
        model = TruncatedNormal(50.0, 30.0)
        a = sample_truncated_normal(model, RngStream(9, 4), size=1000)
        b = sample_truncated_normal(model, RngStream(9, 4), size=1000)
        assert np.array_equal(a, b)


class TestTwirlApproximations:
    def test_pta_ad_identity_at_zero_time(self):
        d = pta_probs_ad(100.0, 0.0)
        assert (d.p_i, d.p_x, d.p_y, d.p_z) == (1.0, 0.0, 0.0, 0.0)

    def test_pta_ad_long_time_limit(self):
        d = pta_probs_ad(100.0, 1e9)
        for p in (d.p_i, d.p_x, d.p_y, d.p_z):
            assert p == pytest.approx(0.25, abs=1e-12)

    def test_pta_ad_pinned_values(self):
        d = pta_probs_ad(100.0, 10.0)
        assert d.p_x == pytest.approx(0.023790645491010107, abs=1e-16)
        assert d.p_y == d.p_x
        assert d.p_z == pytest.approx(0.00059464225863288875, abs=1e-16)
        assert d.p_i == pytest.approx(0.9518240667593469, abs=1e-15)

    def test_pta_apd_reduces_to_ad_at_ramsey(self):
        a = pta_probs_ad(100.0, 17.0)
        b = pta_probs_apd(100.0, 200.0, 17.0)
        assert np.allclose(a.as_array(), b.as_array(), atol=1e-12)

    def test_pta_apd_identity_at_zero_time(self):
        d = pta_probs_apd(100.0, 120.0, 0.0)
        assert (d.p_i, d.p_x, d.p_y, d.p_z) == (1.0, 0.0, 0.0, 0.0)

    def test_pta_apd_pinned_values(self):
        d = pta_probs_apd(100.0, 120.0, 10.0)
        assert d.p_z == pytest.approx(0.016187147194328269, abs=1e-16)
        assert d.p_i == pytest.approx(0.93623156182365152, abs=1e-15)

    def test_cta_ad_limits(self):
        assert cta_depol_ad(100.0, 0.0) == 0.0
        assert cta_depol_ad(100.0, 1e9) == pytest.approx(0.75, abs=1e-12)

    def test_cta_ad_pinned_value(self):
        assert cta_depol_ad(100.0, 10.0) == pytest.approx(
            0.048175933240653102, abs=1e-16)

    def test_cta_apd_pinned_value(self):
        assert cta_depol_apd(100.0, 120.0, 10.0) == pytest.approx(
            0.063768438176348483, abs=1e-16)

    def test_cta_apd_ramsey_reduction(self):
        assert cta_depol_apd(100.0, 200.0, 12.0) == pytest.approx(
            cta_depol_ad(100.0, 12.0), abs=1e-12)

    @given(t1=_t1s, t=_ts)
    def test_cta_equals_pta_error_probability_ad(self, t1, t):
        assert cta_depol_ad(t1, t) == pytest.approx(
            pta_probs_ad(t1, t).error_probability, abs=1e-12)

    @given(t1=_t1s, ratio=_ratios, t=_ts)
    def test_cta_equals_pta_error_probability_apd(self, t1, ratio, t):
        t2 = 2.0 * t1 * ratio
        assert cta_depol_apd(t1, t2, t) == pytest.approx(
            pta_probs_apd(t1, t2, t).error_probability, abs=1e-12)

    @given(t1=_t1s, ratio=_ratios, t=_ts)
    def test_pta_dists_are_valid(self, t1, ratio, t):
        for dist in (pta_probs_ad(t1, t), pta_probs_apd(t1, 2 * t1 * ratio,
                                                        t)):
            arr = dist.as_array()
            assert np.all(arr >= 0) and np.all(arr <= 1)
            assert arr.sum() == pytest.approx(1.0, abs=1e-12)

    @given(t1=_t1s, t_lo=_ts, t_hi=_ts)
    def test_cta_monotone_in_time(self, t1, t_lo, t_hi):
        lo, hi = sorted((t_lo, t_hi))
        assert cta_depol_ad(t1, lo) <= cta_depol_ad(t1, hi) + 1e-15
        assert cta_depol_apd(t1, 1.5 * t1, lo) <= \
            cta_depol_apd(t1, 1.5 * t1, hi) + 1e-15


class TestKraus:
    def test_ad_zero_damping_is_identity(self):
        ops = kraus_ad(0.0).operators
        assert np.allclose(ops[0], np.eye(2))
        assert np.allclose(ops[1], 0.0)

    def test_apd_completeness(self):
        ks = kraus_apd(DampingPair(0.3, 0.2))
        total = sum(E.conj().T @ E for E in ks)
        assert np.abs(total - np.eye(2)).max() < 1e-12

    def test_apd_reduces_to_ad(self):
        a = kraus_ad(0.4).operators
        b = kraus_apd(DampingPair(0.4, 0.0)).operators
        assert np.allclose(a[0], b[0]) and np.allclose(a[1], b[1])
        assert np.allclose(b[2], 0.0)

    def test_excited_state_population(self):
        gamma = 0.37
        rho = np.diag([0.0, 1.0]).astype(complex)
        out = sum(E @ rho @ E.conj().T for E in kraus_ad(gamma))
        assert out[1, 1].real == pytest.approx(1.0 - gamma, abs=1e-12)

    def test_out_of_range_rejected(self):
        with pytest.raises(DomainError):
            kraus_ad(1.5)
        with pytest.raises(DomainError):
            DampingPair(-0.1, 0.0)
        with pytest.raises(DomainError):
            KrausSet([np.eye(2) * 0.5])


class TestSolveTAlgo:
    def test_round_trip(self):
        target = cta_depol_ad(100.0, 5.0)
        assert solve_t_algo(100.0, target, "cta_ad") == pytest.approx(
            5.0, abs=1e-8)

    def test_small_target_small_time(self):
        assert solve_t_algo(100.0, 1e-9, "cta_ad") < 1e-5

    def test_pinned_against_closed_form(self):
        # cta_ad inverts in closed form: t = -2 t1 log(2 sqrt(1-p) - 1)
        assert solve_t_algo(100.0, 0.1, "cta_ad") == pytest.approx(
            21.65816182187834, abs=1e-8)

    def test_apd_round_trip(self):
        target = cta_depol_apd(100.0, 150.0, 7.0)
        assert solve_t_algo(100.0, target, "cta_apd",
                            mu_t2=150.0) == pytest.approx(7.0, abs=1e-8)

    def test_unreachable_target(self):
        with pytest.raises(DomainError):
            solve_t_algo(100.0, 0.75, "cta_ad")
        with pytest.raises(DomainError):
            solve_t_algo(100.0, 0.9, "cta_ad")

    def test_requires_known_model(self):
        with pytest.raises(UsageError):
            solve_t_algo(100.0, 0.1, "pta_ad")


class TestDecoherenceSpec:
    def test_ramsey_invariant(self):
        with pytest.raises(DomainError):
            DecoherenceSpec(100.0, 0.0, 201.0, 0.0, 1.0)

    def test_cv_accessors(self):
        spec = DecoherenceSpec(100.0, 25.0, 150.0, 15.0, 1.0)
        assert spec.cv_t1 == 0.25
        assert spec.cv_t2 == 0.1

    def test_positive_fields(self):
        with pytest.raises(DomainError):
            DecoherenceSpec(0.0, 0.0, 100.0, 0.0, 1.0)
        with pytest.raises(DomainError):
            DecoherenceSpec(100.0, -1.0, 100.0, 0.0, 1.0)
        with pytest.raises(DomainError):
            DecoherenceSpec(100.0, 0.0, 100.0, 0.0, 0.0)


class TestBlockSampling:
    def _spec(self, cv):
        return DecoherenceSpec(100.0, cv * 100.0, 160.0, cv * 160.0, 10.0)

    def test_fluctuation_free_modes_agree_exactly(self):
        spec = self._spec(0.0)
        errors = {}
        for mode in ("static", "stvqc", "ftvqc"):
            op, probs = sample_block_error(5, mode, spec, "pta_apd",
                                           RngStream(11, 3))
            errors[mode] = op
            assert np.allclose(probs - probs[0], 0.0)
        assert errors["static"] == errors["stvqc"]
        assert errors["static"] == errors["ftvqc"]

    def test_reproducible_given_stream(self):
        spec = self._spec(0.25)
        a, pa = sample_block_error(7, "ftvqc", spec, "cta_apd",
                                   RngStream(5, 77))
        b, pb = sample_block_error(7, "ftvqc", spec, "cta_apd",
                                   RngStream(5, 77))
        assert a == b and np.array_equal(pa, pb)

    def test_invalid_mode_and_model(self):
        spec = self._spec(0.1)
        with pytest.raises(UsageError):
            sample_block_error(3, "warp", spec, "cta_ad", RngStream(0))
        with pytest.raises(UsageError):
            sample_block_error(3, "static", spec, "cta", RngStream(0))
        with pytest.raises(UsageError):
            sample_block_error(0, "static", spec, "cta_ad", RngStream(0))

    def test_probs_rows_are_valid_distributions(self):
        spec = self._spec(0.25)
        _, probs = sample_block_error(64, "ftvqc", spec, "pta_apd",
                                      RngStream(13))
        assert np.all(probs >= 0) and np.all(probs <= 1)
        assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-12)

    def _per_qubit_error_probs(self, mode, blocks=100_000):
        spec = DecoherenceSpec(100.0, 25.0, 200.0, 0.0, 10.0)
        out = np.empty((blocks, 2))
        for b in range(blocks):
            gen = RngStream(123, b).generator()
            probs = block_pauli_probs(2, mode, spec, "cta_ad", gen)
            out[b] = 1.0 - probs[:, 0]
        return out

    def test_ftvqc_qubitwise_uncorrelated(self):
        p = self._per_qubit_error_probs("ftvqc")
        assert abs(np.corrcoef(p[:, 0], p[:, 1])[0, 1]) < 0.01

    def test_stvqc_qubitwise_fully_correlated(self):
        p = self._per_qubit_error_probs("stvqc")
        assert np.corrcoef(p[:, 0], p[:, 1])[0, 1] > 0.999


class TestPauliDist:
    def test_invalid_sum_rejected(self):
        with pytest.raises(DomainError):
            PauliDist(0.5, 0.5, 0.5, 0.5)

    def test_depolarizing_constructor(self):
        d = PauliDist.depolarizing(0.3)
        assert d.p_i == 0.7 and d.p_x == pytest.approx(0.1)
        assert d.error_probability == pytest.approx(0.3)
