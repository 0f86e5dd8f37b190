import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from obsolib.dist import (
    GammaMixing,
    NegBinModel,
    PoissonModel,
    gamma_pdf,
    mixture_pmf_oracle,
    negbin_cdf,
    negbin_cdf_sum,
    negbin_logpmf,
    negbin_mean_var,
    negbin_pmf,
    negbin_tail_sum,
    poisson_pmf,
)
from obsolib.errors import DomainError

alphas = st.floats(min_value=0.05, max_value=20.0)
betas = st.floats(min_value=0.01, max_value=5.0)


class TestConstruction:
    @pytest.mark.parametrize("bad", [0.0, -1.0, math.nan, math.inf])
    def test_rejects_non_positive(self, bad):
        with pytest.raises(DomainError):
            PoissonModel(bad)
        with pytest.raises(DomainError):
            NegBinModel(bad, 1.0)
        with pytest.raises(DomainError):
            NegBinModel(1.0, bad)
        with pytest.raises(DomainError):
            GammaMixing(1.0, bad)

    def test_q0(self):
        m = NegBinModel(1.71, 0.18)
        assert m.q0 == pytest.approx(0.18 / 1.18)
        assert 0 < m.q0 < 1
        assert m.mixing == GammaMixing(1.71, 0.18)


class TestPoisson:
    def test_known_values(self):
        assert poisson_pmf(PoissonModel(1.0), 0) == pytest.approx(0.3678794411714423, abs=1e-15)
        assert poisson_pmf(PoissonModel(2.0), 2) == pytest.approx(2 * math.exp(-2), abs=1e-15)

    def test_normalization(self):
        assert math.fsum(poisson_pmf(PoissonModel(9.63), x) for x in range(201)) == pytest.approx(1, abs=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(0.01, 500.0), st.integers(0, 2000))
    def test_matches_scipy(self, theta, x):
        assert poisson_pmf(PoissonModel(theta), x) == pytest.approx(stats.poisson.pmf(x, theta), rel=1e-10, abs=1e-300)

    def test_negative_x_rejected(self):
        with pytest.raises(DomainError):
            poisson_pmf(PoissonModel(1.0), -1)


class TestGamma:
    def test_exponential_case(self):
        assert gamma_pdf(GammaMixing(1, 2), 0.5) == pytest.approx(2 * math.exp(-1), abs=1e-15)

    def test_mode(self):
        mix = GammaMixing(3, 2)
        assert gamma_pdf(mix, 1.0) > gamma_pdf(mix, 0.999)
        assert gamma_pdf(mix, 1.0) > gamma_pdf(mix, 1.001)

    def test_integrates_to_one(self):
        mix = GammaMixing(1.71, 0.18)
        total, _ = integrate.quad(lambda t: gamma_pdf(mix, t) if t > 0 else 0.0, 0, np.inf, limit=200)
        assert total == pytest.approx(1.0, abs=1e-8)

    def test_domain(self):
        with pytest.raises(DomainError):
            gamma_pdf(GammaMixing(1, 1), 0.0)


class TestNegBin:
    def test_geometric_case(self):
        m = NegBinModel(1, 1)
        for x in range(10):
            assert negbin_pmf(m, x) == pytest.approx(0.5 ** (x + 1), rel=1e-14)

    @settings(max_examples=300, deadline=None)
    @given(alphas, betas, st.integers(0, 3000))
    def test_matches_scipy_nbinom(self, a, b, x):
        # scipy's nbinom(n, p) with n = alpha, p = beta/(1+beta)
        ref = stats.nbinom.logpmf(x, a, b / (1 + b))
        assert negbin_logpmf(NegBinModel(a, b), x) == pytest.approx(ref, rel=1e-9, abs=1e-9)

    @settings(max_examples=100, deadline=None)
    @given(alphas, betas)
    def test_mean_matches_alpha_over_beta(self, a, b):
        m = NegBinModel(a, b)
        mean, var, idx = negbin_mean_var(m)
        assert mean == pytest.approx(a / b)
        assert var > mean
        assert idx > 1
        assert stats.nbinom.mean(a, b / (1 + b)) == pytest.approx(mean, rel=1e-12)
        assert stats.nbinom.var(a, b / (1 + b)) == pytest.approx(var, rel=1e-12)

    def test_mean_var_examples(self):
        assert negbin_mean_var(NegBinModel(1, 1)) == pytest.approx((1, 2, 2))
        assert negbin_mean_var(NegBinModel(1.71, 0.18))[0] == pytest.approx(9.5)

    def test_empirical_mean_by_summation(self):
        m = NegBinModel(1.71, 0.18)
        mean = math.fsum(x * negbin_pmf(m, x) for x in range(2000))
        assert mean == pytest.approx(9.5, rel=1e-12)

    @pytest.mark.parametrize("a, b", [(1.71, 0.18), (1.11, 0.05), (0.5, 0.03), (3.0, 0.5)])
    def test_normalization(self, a, b):
        m = NegBinModel(a, b)
        mean, var, _ = negbin_mean_var(m)
        big = int(mean + 50 * math.sqrt(var))
        assert math.fsum(negbin_pmf(m, x) for x in range(big + 1)) >= 1 - 1e-9

    def test_large_age_is_finite(self):
        v = negbin_pmf(NegBinModel(1.11, 0.05), 10_000)
        assert math.isfinite(v) and v >= 0
        assert math.isfinite(negbin_logpmf(NegBinModel(1.11, 0.05), 10_000))


class TestCdf:
    def test_examples(self):
        assert negbin_cdf(NegBinModel(1, 1), 0) == pytest.approx(0.5, abs=1e-15)
        assert negbin_cdf(NegBinModel(1.71, 0.18), 500) == pytest.approx(1.0, abs=1e-12)
        # rounded reference parameters: CB survival beyond age 19 is about 0.1112
        assert negbin_cdf(NegBinModel(1.71, 0.18), 19) == pytest.approx(1 - 0.1112, abs=5e-3)

    @settings(max_examples=150, deadline=None)
    @given(st.floats(0.3, 5.0), st.floats(0.02, 2.0), st.integers(0, 300))
    def test_beta_route_matches_summation(self, a, b, x):
        m = NegBinModel(a, b)
        assert abs(negbin_cdf(m, x) - negbin_cdf_sum(m, x)) <= 1e-10

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0.3, 5.0), st.floats(0.02, 2.0), st.integers(0, 300))
    def test_tail_sum_complements_cdf(self, a, b, x):
        m = NegBinModel(a, b)
        if x == 0:
            assert negbin_tail_sum(m, 0) == pytest.approx(1.0, abs=1e-12)
        else:
            assert abs(negbin_tail_sum(m, x) - (1 - negbin_cdf_sum(m, x - 1))) <= 1e-10


class TestMixtureOracle:
    def test_geometric(self):
        assert mixture_pmf_oracle(GammaMixing(1, 1), 0) == pytest.approx(0.5, abs=1e-9)

    def test_closed_form_zero(self):
        assert mixture_pmf_oracle(GammaMixing(1.11, 0.05), 0) == pytest.approx((0.05 / 1.05) ** 1.11, abs=1e-8)

    @pytest.mark.parametrize("x", [7, 20])
    def test_cb_parameters(self, x):
        assert abs(mixture_pmf_oracle(GammaMixing(1.71, 0.18), x) - negbin_pmf(NegBinModel(1.71, 0.18), x)) <= 1e-8

    def test_mixture_identity_random(self):
        # 100 random (alpha, beta) pairs, x = 0..60
        rng = np.random.default_rng(11)
        worst = 0.0
        for _ in range(100):
            a, b = float(rng.uniform(0.5, 3.0)), float(rng.uniform(0.03, 0.5))
            m = NegBinModel(a, b)
            for x in range(61):
                worst = max(worst, abs(negbin_pmf(m, x) - mixture_pmf_oracle(m.mixing, x)))
        assert worst <= 1e-8
