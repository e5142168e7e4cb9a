import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from batchsearch import (
    ConfigError,
    NormalGammaPrior,
    draw_precision,
    posterior_params,
    sample_cluster_value,
    thompson_select,
)

PRIOR = NormalGammaPrior()


class TestPosteriorParams:
    def test_worked_example(self):
        post = posterior_params(PRIOR, np.array([0.6, 0.8]))
        # closed forms: shape = 1 + 2/2; rate = 1 + 0.01 + 2*10*0.04/24;
        # mean = (2*0.7 + 10*0.5) / 12
        assert post.gamma_shape == pytest.approx(2.0, abs=1e-12)
        assert post.gamma_rate == pytest.approx(1.0 + 0.01 + 1.0 / 30.0, abs=1e-12)
        assert post.normal_mean == pytest.approx(8.0 / 15.0, abs=1e-12)
        assert post.count == 2
        assert post.precision_weight == pytest.approx(12.0)

    def test_empty_samples_return_prior(self):
        post = posterior_params(PRIOR, np.array([]))
        assert post.gamma_shape == PRIOR.alpha
        assert post.gamma_rate == PRIOR.beta
        assert post.normal_mean == PRIOR.mu0
        assert post.count == 0
        assert post.precision_weight == PRIOR.n0

    def test_single_sample(self):
        post = posterior_params(PRIOR, np.array([0.9]))
        assert post.gamma_shape == pytest.approx(1.5)
        # no dispersion term; only the prior-disagreement term
        assert post.gamma_rate == pytest.approx(
            1.0 + 10.0 * 0.4**2 / (2.0 * 11.0), abs=1e-12
        )
        assert post.normal_mean == pytest.approx((0.9 + 5.0) / 11.0)

    @given(
        st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=1, max_size=50)
    )
    def test_posterior_mean_between_prior_and_sample_mean(self, xs):
        post = posterior_params(PRIOR, np.array(xs))
        lo = min(np.mean(xs), PRIOR.mu0) - 1e-12
        hi = max(np.mean(xs), PRIOR.mu0) + 1e-12
        assert lo <= post.normal_mean <= hi

    @given(
        st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=2, max_size=50)
    )
    def test_rate_grows_with_dispersion(self, xs):
        xs = np.array(xs)
        base = posterior_params(PRIOR, xs)
        # doubling deviations around the same mean leaves every term
        # except the dispersion sum unchanged
        wider = posterior_params(PRIOR, xs.mean() + 2.0 * (xs - xs.mean()))
        assert wider.gamma_shape == base.gamma_shape
        assert wider.normal_mean == pytest.approx(base.normal_mean, abs=1e-9)
        assert wider.gamma_rate >= base.gamma_rate - 1e-12

    def test_more_data_tightens_mean_toward_samples(self):
        few = posterior_params(PRIOR, np.full(2, 0.9))
        many = posterior_params(PRIOR, np.full(200, 0.9))
        assert abs(many.normal_mean - 0.9) < abs(few.normal_mean - 0.9)

    def test_prior_validation(self):
        with pytest.raises(ConfigError):
            NormalGammaPrior(n0=0.0).validate()
        with pytest.raises(ConfigError):
            NormalGammaPrior(alpha=0.0).validate()
        with pytest.raises(ConfigError):
            NormalGammaPrior(beta=-1.0).validate()


class TestSampling:
    def test_draw_precision_positive_and_deterministic(self):
        post = posterior_params(PRIOR, np.array([0.6, 0.8]))
        a = draw_precision(post, np.random.default_rng(0))
        b = draw_precision(post, np.random.default_rng(0))
        assert a == b
        assert a > 0.0

    def test_gamma_rate_is_inverse_scale(self):
        # mean of Gamma(shape, rate) is shape / rate
        post = posterior_params(PRIOR, np.array([0.6, 0.8]))
        rng = np.random.default_rng(123)
        draws = np.array([draw_precision(post, rng) for _ in range(20_000)])
        expected = post.gamma_shape / post.gamma_rate
        assert draws.mean() == pytest.approx(expected, rel=0.05)

    def test_sample_uses_cached_precision(self):
        post = posterior_params(PRIOR, np.array([0.6, 0.8]))
        rng1 = np.random.default_rng(7)
        rng2 = np.random.default_rng(7)
        # with precision supplied, only the normal draw consumes the stream
        v1 = sample_cluster_value(post, rng1, precision=2.0)
        v2 = post.normal_mean + rng2.normal(0.0, 1.0 / np.sqrt(post.precision_weight * 2.0))
        assert v1 == pytest.approx(v2, abs=1e-12)

    def test_sample_spread_shrinks_with_precision(self):
        post = posterior_params(PRIOR, np.array([0.6, 0.8]))
        rng = np.random.default_rng(5)
        loose = np.std([sample_cluster_value(post, rng, 0.1) for _ in range(4000)])
        tight = np.std([sample_cluster_value(post, rng, 100.0) for _ in range(4000)])
        assert tight < loose / 5


class TestThompsonSelect:
    def _posteriors(self):
        return [
            posterior_params(PRIOR, np.full(500, 0.2)),
            posterior_params(PRIOR, np.full(500, 0.9)),
            posterior_params(PRIOR, np.full(500, 0.4)),
        ]

    def test_prefers_the_best_arm(self):
        posts = self._posteriors()
        rng = np.random.default_rng(0)
        picks = [thompson_select(posts, rng) for _ in range(300)]
        assert np.bincount(picks, minlength=3).argmax() == 1

    def test_among_mask_restricts(self):
        posts = self._posteriors()
        rng = np.random.default_rng(0)
        among = np.array([True, False, True])
        for _ in range(100):
            assert thompson_select(posts, rng, among=among) in (0, 2)

    def test_deterministic_given_stream(self):
        posts = self._posteriors()
        a = thompson_select(posts, np.random.default_rng(3))
        b = thompson_select(posts, np.random.default_rng(3))
        assert a == b

    def test_empty_inputs_rejected(self):
        with pytest.raises(ConfigError):
            thompson_select([], np.random.default_rng(0))
        posts = self._posteriors()
        with pytest.raises(ConfigError):
            thompson_select(posts, np.random.default_rng(0), among=np.zeros(3, bool))

    def test_supplied_precisions_skip_gamma_draws(self):
        posts = self._posteriors()
        rng1 = np.random.default_rng(11)
        rng2 = np.random.default_rng(11)
        pick1 = thompson_select(posts, rng1, precisions=[5.0, 5.0, 5.0])
        # manually replicate: three normal draws only, argmax of values
        qs = [
            sample_cluster_value(p, rng2, precision=5.0) for p in posts
        ]
        assert pick1 == int(np.argmax(qs))
