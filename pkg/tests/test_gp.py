import numpy as np
import pytest

from batchsearch import (
    ConfigError,
    GPConfig,
    GPNumericalError,
    fit_gp,
    gp_predict,
    refit_sigma,
)
from batchsearch.gp import _chol_with_jitter, rbf_kernel


def _oracle(x, y, queries, cfg):
    """Direct Gram-matrix GP, no Cholesky: the independent reference."""
    ym = y.mean()
    gram = cfg.signal_variance * np.exp(
        -((x[:, None, :] - x[None, :, :]) ** 2).sum(axis=2) / (2 * cfg.length_scale**2)
    )
    k_star = cfg.signal_variance * np.exp(
        -((x[:, None, :] - queries[None, :, :]) ** 2).sum(axis=2)
        / (2 * cfg.length_scale**2)
    )
    inv = np.linalg.inv(gram + cfg.noise_variance * np.eye(len(x)))
    mu = ym + k_star.T @ inv @ (y - ym)
    var = cfg.signal_variance - np.einsum("ij,ik,kj->j", k_star, inv, k_star)
    return mu, np.sqrt(np.maximum(var, 0.0))


class TestAgainstOracle:
    def test_mean_and_sigma_match(self):
        rng = np.random.default_rng(0)
        cfg = GPConfig(length_scale=0.7, signal_variance=1.3, noise_variance=1e-3)
        x = rng.normal(size=(30, 4))
        y = rng.uniform(0.0, 1.0, size=30)
        queries = rng.normal(size=(15, 4))
        model = fit_gp(x, y, cfg)
        mu, sigma = gp_predict(model, queries)
        mu_o, sigma_o = _oracle(x, y, queries, cfg)
        assert np.abs(mu - mu_o).max() < 1e-9
        assert np.abs(sigma - sigma_o).max() < 1e-9

    def test_scalar_query_matches_batch(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(12, 3))
        y = rng.uniform(size=12)
        model = fit_gp(x, y)
        queries = rng.normal(size=(5, 3))
        mu_b, sigma_b = gp_predict(model, queries)
        for i in range(5):
            mu_1, sigma_1 = gp_predict(model, queries[i])
            assert mu_1 == pytest.approx(mu_b[i], abs=1e-12)
            assert sigma_1 == pytest.approx(sigma_b[i], abs=1e-12)


class TestInterpolation:
    def test_zero_noise_interpolates(self):
        # well-separated points keep the Gram matrix well conditioned
        x = np.arange(8, dtype=np.float64)[:, None] * 2.0
        y = np.random.default_rng(2).uniform(0.1, 0.9, size=8)
        model = fit_gp(x, y, GPConfig(noise_variance=0.0))
        mu, sigma = gp_predict(model, x)
        assert np.abs(mu - y).max() <= 1e-6
        assert sigma.max() <= 1e-6

    def test_far_query_reverts_to_prior(self):
        x = np.zeros((5, 2))
        x[:, 0] = np.arange(5)
        y = np.random.default_rng(3).uniform(size=5)
        cfg = GPConfig(signal_variance=2.0)
        model = fit_gp(x, y, cfg)
        mu, sigma = gp_predict(model, np.array([1e6, 1e6]))
        # no kernel support: mean falls back to the training mean,
        # sd to the prior amplitude
        assert mu == pytest.approx(y.mean(), abs=1e-12)
        assert sigma == pytest.approx(np.sqrt(2.0), abs=1e-12)


class TestRefitSigma:
    def test_variance_never_increases(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(20, 3))
        y = rng.uniform(size=20)
        model = fit_gp(x, y)
        grid = rng.normal(size=(50, 3))
        _, sigma_before = gp_predict(model, grid)
        widened = refit_sigma(model, rng.normal(size=(6, 3)))
        _, sigma_after = gp_predict(widened, grid)
        assert np.all(sigma_after <= sigma_before + 1e-12)

    def test_mean_untouched(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(15, 2))
        y = rng.uniform(size=15)
        model = fit_gp(x, y)
        grid = rng.normal(size=(20, 2))
        mu_before, _ = gp_predict(model, grid)
        widened = refit_sigma(model, rng.normal(size=(4, 2)))
        mu_after, _ = gp_predict(widened, grid)
        assert np.array_equal(mu_before, mu_after)

    def test_sigma_drops_at_added_points(self):
        rng = np.random.default_rng(6)
        x = rng.normal(size=(10, 2))
        y = rng.uniform(size=10)
        model = fit_gp(x, y)
        new = rng.normal(size=(3, 2)) + 5.0  # away from training data
        _, before = gp_predict(model, new)
        widened = refit_sigma(model, new)
        _, after = gp_predict(widened, new)
        assert np.all(after < before * 0.2)

    def test_empty_refit_is_identity(self):
        rng = np.random.default_rng(7)
        model = fit_gp(rng.normal(size=(8, 2)), rng.uniform(size=8))
        same = refit_sigma(model, np.empty((0, 2)))
        assert same is model

    def test_original_model_unchanged(self):
        rng = np.random.default_rng(8)
        model = fit_gp(rng.normal(size=(8, 2)), rng.uniform(size=8))
        n_sigma = model.x_sigma.shape[0]
        refit_sigma(model, rng.normal(size=(3, 2)))
        assert model.x_sigma.shape[0] == n_sigma


class TestValidation:
    def test_shape_mismatch_on_fit(self):
        with pytest.raises(GPNumericalError) as exc:
            fit_gp(np.zeros((3, 2)), np.zeros(4))
        assert exc.value.code == "SHAPE_MISMATCH"

    def test_shape_mismatch_on_query(self):
        model = fit_gp(np.zeros((3, 2)) + np.arange(3)[:, None], np.array([0.1, 0.5, 0.9]))
        with pytest.raises(GPNumericalError) as exc:
            gp_predict(model, np.zeros((2, 5)))
        assert exc.value.code == "SHAPE_MISMATCH"

    def test_empty_training_rejected(self):
        with pytest.raises(GPNumericalError):
            fit_gp(np.empty((0, 2)), np.empty(0))

    def test_config_validation(self):
        for bad in (
            GPConfig(length_scale=0.0),
            GPConfig(signal_variance=0.0),
            GPConfig(noise_variance=-1.0),
            GPConfig(beta=-1.0),
            GPConfig(refit_interval=0),
        ):
            with pytest.raises(ConfigError):
                bad.validate()

    def test_singular_kernel_error(self):
        not_psd = np.array([[-1.0, 0.0], [0.0, -1.0]])
        with pytest.raises(GPNumericalError) as exc:
            _chol_with_jitter(not_psd, 0.0)
        assert exc.value.code == "SINGULAR_KERNEL"

    def test_jitter_rescues_duplicates(self):
        # duplicated rows make the Gram singular at zero noise; the
        # escalating jitter must still produce a factorization
        x = np.array([[0.0, 0.0], [0.0, 0.0], [3.0, 1.0]])
        model = fit_gp(x, np.array([0.2, 0.2, 0.8]), GPConfig(noise_variance=0.0))
        mu, sigma = gp_predict(model, x)
        assert np.isfinite(mu).all() and np.isfinite(sigma).all()


class TestKernel:
    def test_diagonal_is_signal_variance(self):
        cfg = GPConfig(signal_variance=1.7)
        x = np.random.default_rng(0).normal(size=(6, 3))
        gram = rbf_kernel(x, x, cfg)
        assert np.allclose(np.diag(gram), 1.7, atol=1e-12)

    def test_decay_with_distance(self):
        cfg = GPConfig(length_scale=1.0, signal_variance=1.0)
        a = np.array([[0.0]])
        assert rbf_kernel(a, np.array([[1.0]]), cfg)[0, 0] == pytest.approx(
            np.exp(-0.5)
        )
        assert rbf_kernel(a, np.array([[3.0]]), cfg)[0, 0] < rbf_kernel(
            a, np.array([[1.0]]), cfg
        )[0, 0]

    def test_symmetric(self):
        x = np.random.default_rng(1).normal(size=(5, 2))
        gram = rbf_kernel(x, x, GPConfig())
        assert np.allclose(gram, gram.T, atol=1e-15)
