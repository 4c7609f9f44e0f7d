import numpy as np
import pytest

from uplift import mlp
from uplift.errors import DegenerateData, ShapeError
from uplift.features import FeatureVector
from uplift.optim import TrainConfig

from conftest import finite_difference, max_relative_error


def vec(values, dimension=None):
    values = np.asarray(values, dtype=np.float64)
    dimension = dimension or len(values)
    return FeatureVector(indices=np.arange(len(values)), values=values,
                         dimension=dimension)


def random_net(seed, input_dim=4, hidden=(3, 2)):
    """Small net with randomized biases so no ReLU pre-activation can sit
    exactly on the kink (zero biases make that happen whenever an entire
    layer goes dead)."""
    model = mlp.new_mlp(input_dim, hidden=hidden, seed=seed)
    rng = np.random.default_rng(seed + 10_000)
    for layer in model.layers:
        layer.b = rng.normal(0.0, 0.5, size=layer.b.shape)
    return model


class TestForward:
    def test_zero_weights_give_half(self):
        model = mlp.new_mlp(3, hidden=(2,), seed=0)
        for layer in model.layers:
            layer.W = np.zeros_like(layer.W)
            layer.b = np.zeros_like(layer.b)
        assert mlp.mlp_forward(model, vec([0.3, -0.7, 0.1])) == 0.5

    def test_single_sigmoid_layer_zero_input(self):
        model = mlp.MlpModel(
            layers=[mlp.DenseLayer(W=np.array([[1.0]]), b=np.zeros(1),
                                   activation=mlp.SIGMOID)],
            input_dim=1)
        x = FeatureVector(indices=np.array([], dtype=np.int64),
                          values=np.array([]), dimension=1)
        assert mlp.mlp_forward(model, x) == 0.5

    def test_deterministic(self):
        model = mlp.new_mlp(5, hidden=(4,), seed=3)
        x = vec([0.1, 0.2, 0.3, 0.4, 1.0])
        assert mlp.mlp_forward(model, x) == mlp.mlp_forward(model, x)

    def test_output_in_unit_interval(self):
        rng = np.random.default_rng(0)
        for seed in range(5):
            model = random_net(seed)
            p = mlp.mlp_forward(model, vec(rng.normal(size=4) * 10))
            assert 0.0 < p < 1.0

    def test_shape_error(self):
        model = mlp.new_mlp(4, hidden=(2,), seed=0)
        with pytest.raises(ShapeError):
            mlp.mlp_forward(model, vec([1.0, 2.0]))


class TestBceLoss:
    def test_half(self):
        assert mlp.bce_loss(0.5, 1) == pytest.approx(0.6931, abs=1e-4)
        assert mlp.bce_loss(0.5, 0) == pytest.approx(0.6931, abs=1e-4)

    def test_near_perfect(self):
        assert mlp.bce_loss(1 - 1e-7, 1) == pytest.approx(1e-7, abs=1e-8)

    def test_clamped_at_extremes(self):
        assert np.isfinite(mlp.bce_loss(0.0, 1))
        assert np.isfinite(mlp.bce_loss(1.0, 0))


class TestBackward:
    def test_gradient_check(self):
        rng = np.random.default_rng(7)
        for seed in range(6):
            model = random_net(seed)
            x = vec(rng.normal(size=4))
            y = int(rng.integers(2))
            analytic = mlp.mlp_backward(model, x, y)
            numeric = finite_difference(
                lambda: mlp.bce_loss(mlp.mlp_forward(model, x), y), model.params())
            assert max_relative_error(analytic, numeric) < 1e-4

    def test_saturated_prediction_kills_gradient(self):
        # One sigmoid unit with a large bias: p >= 1-1e-6 and y=1.
        model = mlp.MlpModel(
            layers=[mlp.DenseLayer(W=np.array([[0.5]]), b=np.array([20.0]),
                                   activation=mlp.SIGMOID)],
            input_dim=1)
        x = vec([1.0])
        assert mlp.mlp_forward(model, x) >= 1 - 1e-6
        grads = mlp.mlp_backward(model, x, 1)
        norm = np.sqrt(sum(float(np.sum(g * g)) for g in grads))
        assert norm <= 1e-5

    def test_zero_input_gradients(self):
        model = random_net(2)
        x = FeatureVector(indices=np.array([], dtype=np.int64),
                          values=np.array([]), dimension=4)
        grads = mlp.mlp_backward(model, x, 1)
        np.testing.assert_array_equal(grads[0], np.zeros_like(grads[0]))
        assert np.any(grads[1] != 0)


class TestTrain:
    def _separable(self):
        # Label 1 iff the first feature dominates; 20 points, 2 features + bias.
        pairs = []
        rng = np.random.default_rng(1)
        for k in range(20):
            label = k % 2
            a, b = (0.9, 0.1) if label else (0.1, 0.9)
            x = [a + rng.normal(0, 0.02), b + rng.normal(0, 0.02), 1.0]
            pairs.append((vec(x), label))
        return pairs

    def test_learns_separable_set(self):
        pairs = self._separable()
        cfg = TrainConfig(seed=0, max_epochs=200, batch_size=4,
                          validation_fraction=0.0, early_stop_patience=200)
        model, report = mlp.train_mlp(pairs, cfg, hidden=(8, 4))
        assert report["train_accuracy"] == 1.0
        assert report["epochs_run"] <= 200

    def test_deterministic(self):
        pairs = self._separable()
        cfg = TrainConfig(seed=5, max_epochs=10, validation_fraction=0.0)
        a, _ = mlp.train_mlp(pairs, cfg, hidden=(4,))
        b, _ = mlp.train_mlp(pairs, cfg, hidden=(4,))
        for pa, pb in zip(a.params(), b.params()):
            np.testing.assert_array_equal(pa, pb)

    def test_single_class_rejected(self):
        pairs = [(vec([1.0, 0.0, 1.0]), 1) for _ in range(10)]
        with pytest.raises(DegenerateData):
            mlp.train_mlp(pairs, TrainConfig(seed=0))

    def test_full_batch_descent_monotone(self):
        # Plain gradient descent with a tiny step never increases the
        # batch loss (within float slack).
        pairs = self._separable()[:4]
        model = random_net(3, input_dim=3, hidden=(4,))
        alpha = 1e-4
        losses = []
        for _ in range(50):
            grads = None
            loss = 0.0
            for x, y in pairs:
                g = mlp.mlp_backward(model, x, y)
                grads = g if grads is None else [a + b for a, b in zip(grads, g)]
                loss += mlp.bce_loss(mlp.mlp_forward(model, x), y)
            losses.append(loss / len(pairs))
            params = model.params()
            model.set_params([p - alpha * g / len(pairs)
                              for p, g in zip(params, grads)])
        diffs = np.diff(losses)
        assert np.all(diffs <= 1e-9)
