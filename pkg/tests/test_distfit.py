import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats
from scipy.special import zeta as scipy_zeta

from robotraffic.distfit import (
    CategoricalParams,
    EmpiricalCdf,
    ExponentialParams,
    LognormalParams,
    ZetaParams,
    empirical_cdf,
    fit_categorical,
    fit_lognormal,
    fit_poisson_rate,
    fit_zeta,
    ks_2samp_statistic,
    ks_statistic,
    riemann_zeta,
    sample_categorical,
    sample_exponential,
    sample_lognormal,
    sample_zeta,
    zeta_log_likelihood,
)
from robotraffic.exceptions import AllOnes, DomainError, EmptySample, NonPositiveDuration

from oracles import zeta_mle_grid


class TestPoissonRate:
    @pytest.mark.parametrize("n,t,rate", [(120, 60, 2.0), (1, 1, 1.0), (28583, 3.7e6, 28583 / 3.7e6)])
    def test_ratio(self, n, t, rate):
        assert fit_poisson_rate(n, t).rate == rate

    @pytest.mark.parametrize("t", [0, -1])
    def test_bad_duration(self, t):
        with pytest.raises(NonPositiveDuration):
            fit_poisson_rate(5, t)

    def test_no_sessions(self):
        with pytest.raises(EmptySample):
            fit_poisson_rate(0, 10)


class TestRiemannZeta:
    def test_known_values(self):
        assert riemann_zeta(2) == pytest.approx(math.pi ** 2 / 6, abs=1e-12)
        assert riemann_zeta(4) == pytest.approx(math.pi ** 4 / 90, abs=1e-12)
        assert riemann_zeta(50) == pytest.approx(1 + 2.0 ** -50, abs=1e-15)

    @pytest.mark.parametrize("s", np.linspace(1.1, 50, 40))
    def test_matches_scipy_absolute(self, s):
        assert abs(riemann_zeta(s) - scipy_zeta(s, 1)) <= 1e-12

    @pytest.mark.parametrize("s", [1 + 1e-6, 1 + 1e-4, 1.001, 1.01, 1.05])
    def test_near_pole_relative(self, s):
        # absolute 1e-12 is below float64 resolution once zeta(s) ~ 1e6
        assert riemann_zeta(s) == pytest.approx(scipy_zeta(s, 1), rel=1e-13)

    @pytest.mark.parametrize("s", [1.0, 0.5, -2])
    def test_domain(self, s):
        with pytest.raises(DomainError):
            riemann_zeta(s)


class TestFitZeta:
    def test_small_sample_stationarity(self):
        s = fit_zeta([1, 1, 1, 2]).s
        h = 1e-6
        dlog = (math.log(scipy_zeta(s + h, 1)) - math.log(scipy_zeta(s - h, 1))) / (2 * h)
        assert dlog == pytest.approx(-math.log(2) / 4, abs=1e-6)
        assert s == pytest.approx(zeta_mle_grid([1, 1, 1, 2]), abs=1e-3)

    def test_all_ones(self):
        with pytest.raises(AllOnes):
            fit_zeta([1, 1, 1])

    def test_empty(self):
        with pytest.raises(EmptySample):
            fit_zeta([])

    @pytest.mark.parametrize("bad", [[0, 2], [1.5, 2]])
    def test_bad_samples(self, bad):
        with pytest.raises(ValueError):
            fit_zeta(bad)

    def test_round_trip(self):
        x = sample_zeta(np.random.default_rng(5), ZetaParams(2.5), 50_000)
        assert abs(fit_zeta(x).s - 2.5) < 0.05

    def test_likelihood_peaks_at_estimate(self):
        x = [1, 1, 2, 3, 1, 7]
        s = fit_zeta(x).s
        ll = zeta_log_likelihood(s, x)
        assert ll >= zeta_log_likelihood(s - 1e-3, x) and ll >= zeta_log_likelihood(s + 1e-3, x)


class TestFitLognormal:
    def test_two_points(self):
        p = fit_lognormal([1.0, math.e ** 2])
        assert p.mu == pytest.approx(1.0) and p.sigma == pytest.approx(math.sqrt(2))

    def test_identical(self):
        p = fit_lognormal([math.e, math.e])
        assert p.mu == pytest.approx(1.0) and p.sigma == 0.0
        assert np.all(sample_lognormal(np.random.default_rng(0), p, 5) == pytest.approx(math.e))

    @pytest.mark.parametrize("bad", [[1.0], [1.0, 0.0], [2.0, -1.0]])
    def test_rejects(self, bad):
        with pytest.raises(ValueError):
            fit_lognormal(bad)

    def test_round_trip(self):
        x = sample_lognormal(np.random.default_rng(3), LognormalParams(0.5, 1.2), 100_000)
        p = fit_lognormal(x)
        assert p.mu == pytest.approx(0.5, rel=0.01) and p.sigma == pytest.approx(1.2, rel=0.01)


class TestSamplers:
    def test_exponential_mean(self):
        x = sample_exponential(np.random.default_rng(1), ExponentialParams(2.0), 1_000_000)
        assert x.mean() == pytest.approx(0.5, rel=0.01)
        assert np.all(x >= 0) and np.all(np.isfinite(x))

    def test_exponential_endpoint(self):
        class Zero:
            def random(self, size=None):
                return 0.0 if size is None else np.zeros(size)

        # U = 1 at the inversion endpoint gives a zero gap, not -inf or nan
        assert sample_exponential(Zero(), ExponentialParams(3.0)) == 0.0

    def test_determinism(self):
        a = sample_exponential(np.random.default_rng(9), ExponentialParams(1.0), 10)
        b = sample_exponential(np.random.default_rng(9), ExponentialParams(1.0), 10)
        assert np.array_equal(a, b)

    def test_zeta_pmf_and_mean(self):
        x = sample_zeta(np.random.default_rng(2), ZetaParams(3.0), 1_000_000)
        assert abs((x == 1).mean() - 1 / scipy_zeta(3, 1)) < 0.005
        assert x.mean() == pytest.approx(scipy_zeta(2, 1) / scipy_zeta(3, 1), rel=0.02)

    def test_zeta_scalar_matches_distribution(self):
        rng = np.random.default_rng(4)
        x = np.array([sample_zeta(rng, ZetaParams(2.0)) for _ in range(20_000)])
        assert abs((x == 1).mean() - 1 / scipy_zeta(2, 1)) < 0.01
        assert isinstance(sample_zeta(rng, ZetaParams(2.0)), int)

    def test_zeta_large_exponent(self):
        x = sample_zeta(np.random.default_rng(0), ZetaParams(50), 1000)
        assert np.all(x >= 1) and np.all(x == 1)

    def test_zeta_goodness_of_fit(self):
        x = sample_zeta(np.random.default_rng(8), ZetaParams(1.7), 200_000)
        k = np.arange(1, 11)
        observed = np.array([(x == i).mean() for i in k])
        expected = stats.zipf.pmf(k, 1.7)
        assert np.max(np.abs(observed - expected)) < 0.005

    def test_lognormal_moments(self):
        x = sample_lognormal(np.random.default_rng(6), LognormalParams(0, 1), 1_000_000)
        assert np.median(x) == pytest.approx(1.0, rel=0.01)
        assert x.mean() == pytest.approx(math.exp(0.5), rel=0.02)

    def test_categorical(self):
        rng = np.random.default_rng(7)
        assert set(sample_categorical(rng, CategoricalParams(np.array([1.0])), 100)) == {0}
        x = sample_categorical(rng, CategoricalParams(np.array([0.6, 0.4])), 1_000_000)
        assert abs((x == 0).mean() - 0.6) < 0.005
        x = sample_categorical(rng, CategoricalParams(np.array([0.5, 0.0, 0.5, 0.0])), 100_000)
        assert set(np.unique(x)) == {0, 2}

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(0, 10), min_size=1, max_size=8).filter(lambda w: sum(w) > 0))
    def test_categorical_never_returns_zero_mass(self, w):
        p = fit_categorical(w)
        assert abs(p.probs.sum() - 1) <= 1e-9
        x = sample_categorical(np.random.default_rng(0), p, 2000)
        assert np.all(p.probs[x] > 0)


class TestCategoricalParams:
    @pytest.mark.parametrize("bad", [[0.5, 0.6], [-0.1, 1.1], [], [np.nan, 1.0]])
    def test_rejects(self, bad):
        with pytest.raises(ValueError):
            CategoricalParams(np.array(bad, dtype=float))

    def test_read_only(self):
        p = CategoricalParams(np.array([0.25, 0.75]))
        with pytest.raises(ValueError):
            p.probs[0] = 1.0


class TestEmpiricalCdf:
    def test_counting(self):
        assert empirical_cdf([1, 2, 3])(2) == pytest.approx(2 / 3)

    def test_ties(self):
        f = EmpiricalCdf([5, 5, 5])
        assert f(4.999) == 0 and f(5) == 1
        xs, ys = f.points()
        assert list(xs) == [5] and list(ys) == [1.0]

    def test_single(self):
        f = EmpiricalCdf([1])
        assert f(0.999) == 0 and f(1) == 1

    def test_empty(self):
        with pytest.raises(EmptySample):
            EmpiricalCdf([])


class TestKs:
    def test_single_point(self):
        assert ks_statistic([0.5], lambda x: np.clip(x, 0, 1)) == pytest.approx(0.5)

    def test_quantile_ranks(self):
        n = 40
        x = (np.arange(1, n + 1) - 0.5) / n
        assert ks_statistic(x, lambda v: np.clip(v, 0, 1)) == pytest.approx(0.5 / n)

    def test_self_sample(self):
        x = np.random.default_rng(0).random(100_000)
        assert ks_statistic(x, lambda v: np.clip(v, 0, 1)) < 0.01

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=60))
    def test_matches_scipy_one_sample(self, x):
        ours = ks_statistic(x, stats.norm.cdf)
        assert ours == pytest.approx(stats.kstest(x, "norm").statistic, abs=1e-12)

    # scipy's p-value step can warn on tiny samples; only its statistic is used
    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.integers(0, 20), min_size=1, max_size=50),
           st.lists(st.integers(0, 20), min_size=1, max_size=50))
    def test_matches_scipy_two_sample(self, a, b):
        assert ks_2samp_statistic(a, b) == pytest.approx(stats.ks_2samp(a, b, method="asymp").statistic, abs=1e-12)

    def test_identical_samples(self):
        x = [3.0, 1.0, 2.0, 2.0]
        assert ks_2samp_statistic(x, list(reversed(x))) == 0.0


class TestParamCdfs:
    def test_exponential(self):
        p = ExponentialParams(2.0)
        assert p.mean == 0.5
        assert p.cdf(1.0) == pytest.approx(stats.expon(scale=0.5).cdf(1.0))

    def test_lognormal(self):
        p = LognormalParams(0.3, 0.7)
        x = np.array([0.0, 0.5, 1.0, 4.0])
        assert np.allclose(p.cdf(x), stats.lognorm(0.7, scale=math.exp(0.3)).cdf(x))

    def test_zeta(self):
        p = ZetaParams(2.5)
        k = np.arange(1, 30)
        assert np.allclose(p.pmf(k), stats.zipf.pmf(k, 2.5), rtol=1e-12)
        assert np.allclose(p.cdf(k), stats.zipf.cdf(k, 2.5), rtol=1e-10)

    def test_bad_params(self):
        for bad in (lambda: ExponentialParams(0), lambda: ZetaParams(1.0), lambda: LognormalParams(0, -1)):
            with pytest.raises(ValueError):
                bad()
