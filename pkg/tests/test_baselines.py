import numpy as np
import pytest

from ternrc import (NumericalError, UsageError, lambda_sweep, ridge_eval,
                    ridge_fit, ridge_predict)


class TestRidgeFit:
    def test_hand_solved_line(self):
        model = ridge_fit(np.array([[1.0], [2.0]]), np.array([1.0, 2.0]), lam=0.0)
        assert model.weights[0] == pytest.approx(1.0)
        assert model.bias == pytest.approx(0.0)

    def test_heavy_regularization_shrinks_to_mean(self):
        rng = np.random.default_rng(0)
        x = rng.random((30, 4))
        y = rng.random(30)
        model = ridge_fit(x, y, lam=1e12)
        assert np.all(np.abs(model.weights) < 1e-9)
        assert model.bias == pytest.approx(y.mean())

    def test_duplicated_dataset_same_model(self):
        rng = np.random.default_rng(1)
        x = rng.random((10, 3))
        y = rng.random(10)
        a = ridge_fit(x, y, lam=0.5)
        b = ridge_fit(np.vstack([x, x]), np.concatenate([y, y]), lam=1.0)
        # doubling the data doubles the gram matrix; doubling lambda matches it
        assert np.allclose(a.weights, b.weights)
        assert a.bias == pytest.approx(b.bias)

    def test_underdetermined_unregularized_fails(self):
        rng = np.random.default_rng(2)
        x = rng.random((5, 10))
        y = rng.random(5)
        with pytest.raises(NumericalError, match="lambda"):
            ridge_fit(x, y, lam=0.0)

    def test_closed_form_matches_numerical_minimizer(self):
        optimize = pytest.importorskip("scipy.optimize")
        rng = np.random.default_rng(3)
        for _ in range(10):
            n = int(rng.integers(5, 20))
            k = int(rng.integers(1, 5))
            x = rng.standard_normal((n, k))
            y = rng.standard_normal(n)
            lam = float(rng.uniform(0.01, 5.0))
            model = ridge_fit(x, y, lam)

            def loss(p):
                w, b = p[:k], p[k]
                r = x @ w + b - y
                return r @ r + lam * (w @ w)

            res = optimize.minimize(loss, np.zeros(k + 1), method="BFGS",
                                    options={"gtol": 1e-12})
            assert np.allclose(model.weights, res.x[:k], rtol=1e-6, atol=1e-8)
            assert model.bias == pytest.approx(res.x[k], rel=1e-6, abs=1e-8)


class TestRidgeEval:
    def test_separable_training_data(self):
        rng = np.random.default_rng(4)
        x = rng.random((40, 6))
        w_true = rng.standard_normal(6)
        y = (x @ w_true > np.median(x @ w_true)).astype(float)
        model = ridge_fit(x, y, lam=1e-6)
        m = ridge_eval(model, x, y)
        assert m.accuracy == 1.0

    def test_zero_weight_model_is_chance_on_balanced_data(self):
        x = np.random.default_rng(5).random((20, 3))
        y = np.array([0.0, 1.0] * 10)
        from ternrc.baselines import RidgeModel
        model = RidgeModel(weights=np.zeros(3), bias=0.7, lam=1.0)
        m = ridge_eval(model, x, y)
        # constant predictor, midpoint rule, ties predict negative
        assert m.accuracy == 0.5

    def test_negative_weight_exploits_anticorrelated_node(self):
        # node 1 responds opposite to the target; sign-free weights use it,
        # nonnegative weights cannot
        rng = np.random.default_rng(6)
        n = 60
        t = np.array([0.0, 1.0] * (n // 2))
        states = np.column_stack([
            rng.random(n) * 0.3,            # uninformative
            1.0 - t + rng.random(n) * 0.1,  # anti-correlated with the target
        ])
        model = ridge_fit(states, t, lam=1e-6)
        assert model.weights[1] < 0
        acc_ridge = ridge_eval(model, states, t).accuracy
        best_nonneg = 0.0
        grid = np.linspace(0, 2, 9)
        for w0 in grid:
            for w1 in grid:
                y = states @ np.array([w0, w1])
                pos = t > 0.5
                if y[pos].mean() == y[~pos].mean():
                    continue
                thr = (y[pos].mean() + y[~pos].mean()) / 2
                best_nonneg = max(best_nonneg, float(np.mean((y > thr) == pos)))
        assert acc_ridge > best_nonneg

    def test_prediction_is_affine(self):
        rng = np.random.default_rng(7)
        x = rng.random((12, 4))
        y = rng.random(12)
        model = ridge_fit(x, y, lam=0.1)
        a, b = x[:6], x[6:]
        lhs = ridge_predict(model, a + b)
        rhs = ridge_predict(model, a) + ridge_predict(model, b) - model.bias
        assert np.allclose(lhs, rhs)


class TestLambdaSweep:
    def test_single_candidate(self):
        rng = np.random.default_rng(8)
        x = rng.random((20, 3))
        y = np.array([0.0, 1.0] * 10)
        assert lambda_sweep(x, y, [0.37]) == 0.37

    def test_separable_prefers_smallest_tied_lambda(self):
        rng = np.random.default_rng(9)
        x = rng.standard_normal((60, 2))
        y = (x[:, 0] > 0).astype(float)
        lam = lambda_sweep(x, y, [1e-6, 1e-3, 1.0])
        assert lam == 1e-6

    def test_reproducible(self, rng):
        x = rng.random((40, 5))
        y = (rng.random(40) > 0.5).astype(float)
        grid = [1e-4, 1e-2, 1.0, 100.0]
        assert lambda_sweep(x, y, grid) == lambda_sweep(x, y, grid)

    def test_validation(self):
        x = np.random.default_rng(0).random((10, 2))
        y = np.array([0.0, 1.0] * 5)
        with pytest.raises(UsageError):
            lambda_sweep(x, y, [])
        with pytest.raises(UsageError):
            lambda_sweep(x, y, [1.0], folds=1)
