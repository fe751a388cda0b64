import numpy as np
import pytest

from dss.surrogates import (
    FitError,
    GaussianProcess,
    GradientBoosting,
    RandomForest,
    RegressionTree,
    SurrogateSpec,
    fit,
)


def make_data(seed=1, n=40, d=2):
    rng = np.random.default_rng(seed)
    X = rng.uniform(size=(n, d))
    y = np.sin(3 * X[:, 0]) + X[:, 1] ** 2 + 0.1 * rng.standard_normal(n)
    return X, y


# ---------------------------------------------------------------------------
# CART


def test_tree_splits_on_lowest_feature_for_tied_gain():
    # both columns identical, so every split gain ties; feature 0 must win
    x = np.array([0.0, 1.0, 2.0, 3.0])
    X = np.column_stack([x, x])
    y = np.array([0.0, 0.0, 10.0, 10.0])
    tree = RegressionTree(min_leaf=2).fit(X, y, seed=5)
    feature, threshold, *_ = tree._nodes
    assert feature[0] == 0
    assert threshold[0] == pytest.approx(1.5)


def test_tree_picks_lowest_threshold_among_tied_gains():
    # symmetric y: splitting at 0.5 or 2.5 gives identical gain
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([0.0, 1.0, 1.0, 0.0])
    tree = RegressionTree(min_leaf=1).fit(X, y, seed=0)
    assert tree._nodes[1][0] == pytest.approx(0.5)


def test_tree_respects_max_depth():
    X, y = make_data(n=64)
    tree = RegressionTree(max_depth=1, min_leaf=1).fit(X, y, seed=0)
    feature = tree._nodes[0]
    # depth-1 tree: one split, two leaves
    assert (feature >= 0).sum() == 1


def test_tree_constant_target_is_single_leaf():
    X, y = make_data(n=20)
    tree = RegressionTree().fit(X, np.full(20, 5.0), seed=0)
    assert np.all(tree.predict(X) == 5.0)


def test_tree_fit_is_seed_deterministic():
    X, y = make_data(n=50, d=6)
    a = RegressionTree(n_sub_features=2).fit(X, y, seed=9).predict(X)
    b = RegressionTree(n_sub_features=2).fit(X, y, seed=9).predict(X)
    assert np.array_equal(a, b)


# ---------------------------------------------------------------------------
# random forest


def test_rf_constant_target_predicts_constant():
    X, _ = make_data(n=30)
    rf = RandomForest(n_trees=16).fit(X, np.full(30, 5.0), np.random.default_rng(0))
    assert np.all(rf.predict(X) == 5.0)


def test_rf_predictions_bounded_by_training_targets():
    X, y = make_data(n=60)
    rf = RandomForest(n_trees=32).fit(X, y, np.random.default_rng(1))
    grid = np.random.default_rng(2).uniform(-1, 2, size=(200, 2))
    preds = rf.predict(grid)
    assert preds.min() >= y.min() - 1e-12
    assert preds.max() <= y.max() + 1e-12


def test_rf_is_seed_deterministic():
    X, y = make_data(n=40)
    a = RandomForest(8).fit(X, y, np.random.default_rng(3)).predict(X)
    b = RandomForest(8).fit(X, y, np.random.default_rng(3)).predict(X)
    assert np.array_equal(a, b)


# ---------------------------------------------------------------------------
# gradient boosting


def test_gbm_training_loss_non_increasing():
    X, y = make_data(n=50)
    gbm = GradientBoosting(n_rounds=120, learning_rate=0.1, max_depth=3).fit(X, y)
    sse = gbm.train_sse_path
    assert all(sse[i + 1] <= sse[i] + 1e-12 for i in range(len(sse) - 1))


def test_gbm_one_round_unit_rate_equals_centered_cart():
    X, y = make_data(n=48)
    gbm = GradientBoosting(n_rounds=1, learning_rate=1.0, max_depth=64, min_leaf=2).fit(X, y)
    centered = y - np.mean(y)
    cart = RegressionTree(max_depth=64, min_leaf=2).fit(X, centered, seed=0)
    assert np.array_equal(y - gbm.predict(X), y - (np.mean(y) + cart.predict(X)))


def test_gbm_fits_smooth_surface_well():
    # frozen regression fixture: sum-of-sines target, seed 2024
    rng = np.random.default_rng(2024)
    X = rng.uniform(size=(60, 3))
    y = np.sin(2 * X[:, 0]) + np.sin(3 * X[:, 1]) + np.sin(5 * X[:, 2])
    gbm = GradientBoosting(n_rounds=300, learning_rate=0.1, max_depth=3).fit(X, y)
    r2 = 1 - np.var(y - gbm.predict(X)) / np.var(y)
    assert r2 >= 0.9


def test_gbm_rejects_zero_rounds():
    with pytest.raises(ValueError):
        GradientBoosting(n_rounds=0)
    with pytest.raises(ValueError):
        SurrogateSpec("gradient_boosting", {"n_rounds": 0, "learning_rate": 0.1})


# ---------------------------------------------------------------------------
# gaussian process


def test_gp_noiseless_interpolates_training_points():
    rng = np.random.default_rng(4)
    X = rng.uniform(size=(3, 2))
    y = rng.standard_normal(3)
    gp = GaussianProcess(length_scale=0.7, noise_variance=0.0).fit(X, y)
    assert np.abs(gp.predict(X) - y).max() <= 1e-6


def test_gp_reverts_to_training_mean_far_away():
    rng = np.random.default_rng(5)
    X = rng.uniform(size=(8, 2))
    y = rng.standard_normal(8)
    gp = GaussianProcess(length_scale=0.1, noise_variance=1e-6).fit(X, y)
    far = X + 25.0  # hundreds of length scales away
    assert np.abs(gp.predict(far) - np.mean(y)).max() <= 1e-6


def test_gp_dual_weights_match_direct_solve():
    rng = np.random.default_rng(6)
    for trial in range(5):
        X = rng.uniform(size=(10, 3))
        y = rng.standard_normal(10)
        gp = GaussianProcess(length_scale=0.5, noise_variance=1e-2).fit(X, y)
        # independent route: same kernel matrix, plain linear solve
        diff = X[:, None, :] - X[None, :, :]
        K = 1.0 * np.exp(-np.sum(diff**2, axis=-1) / (2 * 0.5**2))
        A = K + (1e-2 + gp.jitter_) * np.eye(10)
        z = (y - y.mean()) / y.std()
        alpha = np.linalg.solve(A, z)
        Xq = rng.uniform(size=(6, 3))
        diff_q = Xq[:, None, :] - X[None, :, :]
        k_star = np.exp(-np.sum(diff_q**2, axis=-1) / (2 * 0.5**2))
        direct = y.mean() + y.std() * (k_star @ alpha)
        assert np.abs(gp.predict(Xq) - direct).max() <= 1e-8


def test_gp_handles_duplicate_rows_via_jitter():
    X = np.array([[0.1, 0.2], [0.1, 0.2], [0.5, 0.9], [0.8, 0.3]])
    y = np.array([1.0, 1.0, 2.0, 3.0])
    gp = GaussianProcess(length_scale=1.0, noise_variance=0.0).fit(X, y)
    assert np.isfinite(gp.predict(X)).all()


def test_gp_prediction_shifts_with_target_translation():
    X, y = make_data(n=20)
    base = GaussianProcess(0.4, 1.0, 1e-4).fit(X, y).predict(X)
    shifted = GaussianProcess(0.4, 1.0, 1e-4).fit(X, y + 100.0).predict(X)
    assert np.abs(shifted - base - 100.0).max() <= 1e-6


# ---------------------------------------------------------------------------
# spec validation and dispatch


def test_spec_rejects_unknown_family():
    with pytest.raises(ValueError, match="family"):
        SurrogateSpec("neural_net", {})


@pytest.mark.parametrize("family,hyper", [
    ("random_forest", {"n_trees": 0}),
    ("gaussian_process", {"rbf_length_scale": 0.0}),
    ("gaussian_process", {"rbf_length_scale": 1.0, "noise_variance": -1.0}),
    ("gradient_boosting", {"n_rounds": 10, "learning_rate": 1.5}),
    ("gradient_boosting", {"n_rounds": 10, "learning_rate": 0.0}),
])
def test_spec_rejects_bad_hypers(family, hyper):
    with pytest.raises(ValueError):
        SurrogateSpec(family, hyper)


def test_fit_requires_two_observations():
    spec = SurrogateSpec("random_forest", {"n_trees": 4})
    with pytest.raises(ValueError, match="at least 2"):
        fit(spec, np.zeros((1, 2)), np.zeros(1))


def test_fit_requires_matching_lengths():
    spec = SurrogateSpec("random_forest", {"n_trees": 4})
    with pytest.raises(ValueError, match="targets"):
        fit(spec, np.zeros((4, 2)), np.zeros(3))


def test_fit_is_deterministic_given_seed():
    X, y = make_data(n=30)
    spec = SurrogateSpec("random_forest", {"n_trees": 16})
    a = fit(spec, X, y, seed=11).predict(X)
    b = fit(spec, X, y, seed=11).predict(X)
    assert np.array_equal(a, b)


def test_fitted_surrogate_reports_train_size():
    X, y = make_data(n=25)
    spec = SurrogateSpec("gaussian_process", {"rbf_length_scale": 0.5})
    model = fit(spec, X, y, seed=0)
    assert model.train_size == 25


def test_gp_cholesky_exhaustion_raises_fit_error():
    # a kernel matrix with a hugely negative eigenvalue cannot be repaired
    gp = GaussianProcess(length_scale=1.0, noise_variance=0.0)
    bad = np.array([[1.0, 2.0], [2.0, 1.0]])  # not PSD
    with pytest.raises(FitError):
        gp_k = gp._kernel  # keep the real kernel for other calls
        gp._kernel = lambda A, B: bad
        try:
            gp.fit(np.zeros((2, 1)), np.array([0.0, 1.0]))
        finally:
            gp._kernel = gp_k
