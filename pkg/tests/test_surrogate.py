"""
Kernels, Gaussian processes, random forests and Parzen estimators
"""
import math

import numpy as np
import pytest
from scipy.integrate import quad

from backend.tuning_modules.errors import InsufficientDataError
from backend.tuning_modules.models import EncodingScheme, History, Observation, Sense, Status
from backend.tuning_modules.space import get_layout, parse_space, random_sample
from backend.tuning_modules.surrogate import (
    ForestModel,
    ForestParams,
    KernelFamily,
    RegressionTree,
    SurrogateFamily,
    fit_surrogate,
    forest_from_dict,
    forest_to_dict,
    gp_fit,
    gp_fit_hypers,
    gp_loo,
    gp_predict,
    gp_predict_batch,
    hamming_kernel,
    kernel_eval,
    kernel_for_layout,
    kernel_matrix,
    matern52_kernel,
    oob_predict,
    product_kernel,
    rbf_kernel,
    rf_fit,
    rf_predict,
    rf_predict_batch,
    split_counts,
    standardized_objective,
    tpe_fit,
    tpe_score,
    tpe_score_batch,
)


def _leaf(value):
    return RegressionTree(
        feature=np.array([-1]),
        threshold=np.array([0.0]),
        categorical=np.array([False]),
        left_categories=[()],
        left=np.array([-1]),
        right=np.array([-1]),
        value=np.array([float(value)]),
        n_samples=np.array([1]),
    )


# Kernels

@pytest.mark.parametrize("make", [rbf_kernel, matern52_kernel, hamming_kernel])
def test_kernel_at_zero_distance_is_signal_variance(make):
    k = make([0, 1, 2], 0.7)
    a = np.array([0.2, 1.0, 0.0])
    assert kernel_eval(k, a, a) == pytest.approx(1.0)


def test_hamming_one_mismatch():
    k = hamming_kernel([0, 1, 2], 1.0)
    assert kernel_eval(k, np.array([0.0, 1.0, 2.0]), np.array([0.0, 1.0, 1.0])) == pytest.approx(math.exp(-1))


def test_rbf_closed_form():
    k = rbf_kernel([0, 1], 0.5, signal_variance=2.0)
    a, b = np.array([0.0, 0.0]), np.array([0.3, 0.4])
    assert kernel_eval(k, a, b) == pytest.approx(2.0 * math.exp(-0.5 * 0.25 / 0.25))


def test_product_multiplies_components():
    numeric = matern52_kernel([0], 0.5)
    categorical = hamming_kernel([1, 2], 1.0)
    k = product_kernel([numeric, categorical])
    a, b = np.array([0.1, 1.0, 0.0]), np.array([0.4, 0.0, 1.0])
    assert kernel_eval(k, a, b) == pytest.approx(kernel_eval(numeric, a, b) * kernel_eval(categorical, a, b))


def test_mixed_kernel_discounts_category_change(mixed_space):
    layout = get_layout(mixed_space, EncodingScheme.UNIT_ONEHOT)
    k = kernel_for_layout(KernelFamily.MIXED, layout)
    a = np.array([0.5, 0.5, 1.0, 0.0, 0.0])
    b = np.array([0.5, 0.5, 0.0, 1.0, 0.0])
    assert kernel_eval(k, a, b) < kernel_eval(k, a, a)


def test_invalid_kernel_parameters():
    with pytest.raises(ValueError):
        rbf_kernel([0, 1], 0.0)
    with pytest.raises(ValueError):
        product_kernel([rbf_kernel([0], 1.0), hamming_kernel([0], 1.0)])


def test_kernel_matrix_is_symmetric():
    rng = np.random.default_rng(0)
    X = rng.uniform(size=(6, 3))
    K = kernel_matrix(matern52_kernel([0, 1, 2], 0.4), X, X)
    assert np.allclose(K, K.T)
    assert np.all(np.linalg.eigvalsh(K) > -1e-10)


def _mixed_rows(rng, n, numeric=3, categorical=2, levels=3):
    return np.hstack([rng.uniform(size=(n, numeric)), rng.integers(0, levels, size=(n, categorical)).astype(float)])


MIXED_KERNELS = {
    "rbf": lambda: rbf_kernel([0, 1, 2], 0.4, signal_variance=1.7),
    "matern52": lambda: matern52_kernel([0, 1, 2], 0.3),
    "hamming": lambda: hamming_kernel([3, 4], 0.8),
    "product": lambda: product_kernel([matern52_kernel([0, 1, 2], 0.5), hamming_kernel([3, 4], 1.0)]),
}


@pytest.mark.parametrize("variant", sorted(MIXED_KERNELS))
def test_every_kernel_is_positive_semidefinite(variant):
    rng = np.random.default_rng(12)
    X = _mixed_rows(rng, 40)
    X[5] = X[6]
    K = kernel_matrix(MIXED_KERNELS[variant](), X, X)
    assert np.allclose(K, K.T)
    assert np.linalg.eigvalsh(K).min() >= -1e-9


# Gaussian process

def test_gp_single_point_interpolates():
    m = gp_fit(np.array([[0.3]]), np.array([4.2]), rbf_kernel([0], 0.5), noise=0.0)
    assert m.chol.shape == (1, 1)
    mean, var = gp_predict(m, np.array([0.3]))
    assert mean == pytest.approx(4.2)
    assert var <= 1e-8


def test_gp_without_data_returns_prior():
    m = gp_fit(np.zeros((0, 2)), np.zeros(0), rbf_kernel([0, 1], 0.5, signal_variance=1.5), noise=1e-6)
    mean, var = gp_predict(m, np.array([0.1, 0.9]))
    assert mean == 0.0
    assert var == pytest.approx(1.5)


def test_gp_matches_dense_posterior():
    X = np.array([[0.0], [1.0]])
    y = np.array([0.0, 2.0])
    k = rbf_kernel([0], 1.0)
    m = gp_fit(X, y, k, noise=0.0)
    q = np.array([[0.5]])
    K = kernel_matrix(k, X, X)
    k_star = kernel_matrix(k, X, q)[:, 0]
    y_std = (y - y.mean()) / y.std()
    expected_mean = y.mean() + y.std() * k_star @ np.linalg.solve(K, y_std)
    expected_var = (1.0 - k_star @ np.linalg.solve(K, k_star)) * y.var()
    mean, var = gp_predict_batch(m, q)
    assert mean[0] == pytest.approx(expected_mean)
    assert var[0] == pytest.approx(expected_var)


def _dense_posterior(kernel, noise, X, y, Q):
    mean, scale = y.mean(), y.std() if y.std() > 0 else 1.0
    A = kernel_matrix(kernel, X, X) + noise * np.eye(len(y))
    k_star = kernel_matrix(kernel, X, Q)
    expected_mean = mean + scale * k_star.T @ np.linalg.solve(A, (y - mean) / scale)
    prior = np.diag(kernel_matrix(kernel, Q, Q))
    expected_var = (prior - np.sum(k_star * np.linalg.solve(A, k_star), axis=0)) * scale ** 2
    return expected_mean, expected_var


def test_gp_matches_dense_solve_on_random_problems():
    rng = np.random.default_rng(21)
    variants = sorted(MIXED_KERNELS)
    for problem in range(50):
        kernel = MIXED_KERNELS[variants[problem % len(variants)]]()
        n = int(rng.integers(1, 51))
        X, Q = _mixed_rows(rng, n), _mixed_rows(rng, 7)
        y = rng.normal(size=n) * 3.0 + 1.0
        noise = float(rng.uniform(1e-3, 1e-1))
        mean, var = gp_predict_batch(gp_fit(X, y, kernel, noise), Q)
        expected_mean, expected_var = _dense_posterior(kernel, noise, X, y, Q)
        np.testing.assert_allclose(mean, expected_mean, rtol=0, atol=1e-8)
        np.testing.assert_allclose(var, expected_var, rtol=0, atol=1e-8)


def test_gp_duplicate_rows_are_rescued():
    X = np.array([[0.2, 0.2], [0.2, 0.2], [0.8, 0.1]])
    m = gp_fit(X, np.array([1.0, 1.0, 3.0]), rbf_kernel([0, 1], 0.5), noise=0.0)
    mean, var = gp_predict(m, np.array([0.2, 0.2]))
    assert np.isfinite(mean) and var >= 0


def test_gp_loo_matches_refit():
    rng = np.random.default_rng(4)
    X = rng.uniform(size=(8, 2))
    y = np.sin(3 * X[:, 0]) + X[:, 1]
    k = rbf_kernel([0, 1], 0.6)
    m = gp_fit(X, y, k, noise=1e-4)
    loo_mean, _ = gp_loo(m)
    # standardization uses all points, so refit on the same scale by hand
    y_std = (y - y.mean()) / y.std()
    keep = np.arange(1, 8)
    K = kernel_matrix(k, X[keep], X[keep]) + 1e-4 * np.eye(7)
    k_star = kernel_matrix(k, X[keep], X[:1])[:, 0]
    expected = y.mean() + y.std() * k_star @ np.linalg.solve(K, y_std[keep])
    assert loo_mean[0] == pytest.approx(expected, rel=1e-6)


def test_hypers_are_deterministic_and_bounded(small_settings):
    rng = np.random.default_rng(1)
    X = rng.uniform(size=(15, 2))
    y = np.sin(4 * X[:, 0])
    first = gp_fit_hypers(X, y, rbf_kernel([0, 1], 0.5), seed=3, settings=small_settings)
    second = gp_fit_hypers(X, y, rbf_kernel([0, 1], 0.5), seed=3, settings=small_settings)
    assert np.array_equal(first[0].lengthscales, second[0].lengthscales)
    assert first[1] == second[1]
    assert 0.99e-6 <= first[1] <= 1.0 + 1e-9


def test_hypers_need_two_points():
    with pytest.raises(InsufficientDataError):
        gp_fit_hypers(np.array([[0.5]]), np.array([1.0]), rbf_kernel([0], 0.5))


@pytest.mark.slow
def test_hypers_recover_lengthscale():
    rng = np.random.default_rng(7)
    X = rng.uniform(size=(30, 1))
    k = rbf_kernel([0], 0.5)
    K = kernel_matrix(k, X, X) + 1e-8 * np.eye(30)
    y = np.linalg.cholesky(K) @ rng.standard_normal(30)
    kernel, _ = gp_fit_hypers(X, y, rbf_kernel([0], 1.0), seed=0)
    assert 0.25 <= kernel.lengthscales[0] <= 1.0


def test_gp_constant_targets_predict_constant(numeric_space):
    configs = random_sample(numeric_space, 6, seed=2)
    model = fit_surrogate(SurrogateFamily.GP_RBF_UNIT, numeric_space, configs, np.full(6, 3.0), seed=0)
    mean, _ = model.predict(random_sample(numeric_space, 5, seed=8))
    assert np.allclose(mean, 3.0)


# Random forest

def test_forest_constant_targets():
    X = np.random.default_rng(0).uniform(size=(20, 2))
    m = rf_fit(X, np.full(20, 7.0), ForestParams(n_trees=5, seed=1))
    mean, var = rf_predict_batch(m, np.random.default_rng(1).uniform(size=(10, 2)))
    assert np.allclose(mean, 7.0)
    assert np.allclose(var, 0.0)


def test_memorizing_tree():
    rng = np.random.default_rng(2)
    X = rng.uniform(size=(25, 3))
    y = rng.normal(size=25)
    m = rf_fit(X, y, ForestParams(n_trees=1, bootstrap=False, min_samples_leaf=1, feature_fraction=1.0))
    mean, var = rf_predict_batch(m, X)
    assert np.allclose(mean, y)
    assert np.allclose(var, 0.0)


def test_forest_variance_is_population_variance():
    m = ForestModel(params=ForestParams(n_trees=2), trees=[_leaf(1.0), _leaf(3.0)], categorical_columns=(False,))
    assert rf_predict(m, np.array([0.5])) == (2.0, 1.0)


def test_forest_splits_on_relevant_column():
    rng = np.random.default_rng(3)
    X = rng.uniform(size=(200, 2))
    y = 10 * X[:, 0] + 0.01 * rng.normal(size=200)
    m = rf_fit(X, y, ForestParams(n_trees=30, seed=0))
    roots = [tree.feature[0] for tree in m.trees]
    assert roots.count(0) >= 27
    counts = split_counts(m)
    assert counts[0] > counts[1]


def test_forest_categorical_splits():
    X = np.array([[0.0], [1.0], [2.0], [0.0], [1.0], [2.0]])
    y = np.array([5.0, 1.0, 5.0, 5.0, 1.0, 5.0])
    m = rf_fit(X, y, ForestParams(n_trees=1, bootstrap=False, feature_fraction=1.0), categorical=[True])
    mean, _ = rf_predict_batch(m, np.array([[0.0], [1.0], [2.0]]))
    assert mean.tolist() == [5.0, 1.0, 5.0]


def test_forest_is_seeded():
    rng = np.random.default_rng(5)
    X, y = rng.uniform(size=(30, 3)), rng.normal(size=30)
    Q = rng.uniform(size=(10, 3))
    a = rf_predict_batch(rf_fit(X, y, ForestParams(n_trees=8, seed=4)), Q)
    b = rf_predict_batch(rf_fit(X, y, ForestParams(n_trees=8, seed=4)), Q)
    assert np.array_equal(a[0], b[0])


def test_forest_serialization_preserves_predictions():
    rng = np.random.default_rng(6)
    X, y = rng.uniform(size=(40, 2)), rng.normal(size=40)
    m = rf_fit(X, y, ForestParams(n_trees=6, seed=2), categorical=[False, False])
    restored = forest_from_dict(forest_to_dict(m))
    Q = rng.uniform(size=(20, 2))
    assert np.array_equal(rf_predict_batch(m, Q)[0], rf_predict_batch(restored, Q)[0])


def test_out_of_bag_predictions_have_training_shape():
    rng = np.random.default_rng(8)
    X, y = rng.uniform(size=(30, 2)), rng.normal(size=30)
    mean, var = oob_predict(rf_fit(X, y, ForestParams(n_trees=10, seed=0)))
    assert mean.shape == (30,) and np.all(var >= 0)


# Parzen estimators

def _line_history(xs, values, sense=Sense.MINIMIZE):
    history = History(sense)
    for i, (x, v) in enumerate(zip(xs, values)):
        history.append(Observation({"x": float(x)}, float(v), Status.OK, i))
    return history


@pytest.fixture
def line_space():
    return parse_space({
        "name": "line",
        "knobs": [{"name": "x", "type": "continuous", "min": 0, "max": 1, "default": 0.5}],
    })


def test_tpe_good_set_size(line_space):
    xs = np.linspace(0, 1, 8)
    pair = tpe_fit(_line_history(xs, np.abs(xs - 0.2)), line_space, gamma=0.25)
    assert (pair.n_good, pair.n_bad) == (2, 6)


def test_tpe_ties_split_by_index(line_space):
    xs = [0.9, 0.1, 0.5, 0.3]
    pair = tpe_fit(_line_history(xs, [1.0] * 4), line_space, gamma=0.5)
    assert pair.good["x"].centers.tolist() == pytest.approx([0.9, 0.1])


def test_tpe_scores_good_mode_above_one(line_space):
    xs = [0.2, 0.21, 0.6, 0.7, 0.8, 0.9, 0.95, 1.0]
    pair = tpe_fit(_line_history(xs, np.abs(np.array(xs) - 0.2)), line_space, gamma=0.25)
    assert tpe_score(pair, {"x": 0.2}) > 1.0
    assert tpe_score(pair, {"x": 0.9}) < 1.0
    scores = tpe_score_batch(pair, [{"x": 0.2}, {"x": 0.9}])
    assert scores[0] > scores[1]


def test_tpe_needs_two_successes(line_space):
    with pytest.raises(InsufficientDataError):
        tpe_fit(_line_history([0.5], [1.0]), line_space)


# Adapters

def test_standardized_objective_is_minimization_oriented():
    y = standardized_objective(np.array([1.0, 2.0, 3.0]), Sense.MAXIMIZE)
    assert y[0] > y[1] > y[2]
    assert y.mean() == pytest.approx(0.0)
    assert y.std() == pytest.approx(1.0)


@pytest.mark.parametrize("family", list(SurrogateFamily))
def test_every_family_fits_mixed_space(mixed_space, family, small_settings):
    configs = random_sample(mixed_space, 12, seed=1)
    y = np.array([c["buffer_mb"] + (2.0 if c["policy"] == "b" else 0.0) for c in configs])
    model = fit_surrogate(family, mixed_space, configs, y, seed=0, settings=small_settings)
    mean, var = model.predict(random_sample(mixed_space, 4, seed=2))
    assert mean.shape == (4,) and np.all(var >= 0)


def _interior(points):
    return sorted({float(p) for p in points if 0.0 < p < 1.0}) or None


def test_parzen_densities_are_normalized(mixed_space):
    configs = random_sample(mixed_space, 16, seed=6)
    history = History(Sense.MINIMIZE)
    for i, config in enumerate(configs):
        history.append(Observation(config, config["buffer_mb"] + config["workers"], Status.OK, i))
    pair = tpe_fit(history, mixed_space, gamma=0.25)
    for estimators in (pair.good, pair.bad):
        numeric = estimators["buffer_mb"]
        mass, _ = quad(lambda u: float(numeric.density(u)[0]), 0.0, 1.0, points=_interior(numeric.centers), limit=200)
        assert mass == pytest.approx(1.0, abs=1e-6)
        assert float(numeric.density(1.2)[0]) == 0.0
        assert float(np.sum(estimators["policy"].probabilities)) == pytest.approx(1.0)
