import httpx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from uplift import strict
from uplift.errors import DegenerateData, ShapeError, StageFailure
from uplift.features import FeatureVector
from uplift.optim import TrainConfig

from conftest import finite_difference, max_relative_error


def fv(*values):
    values = np.asarray(values, dtype=np.float64)
    return FeatureVector(indices=np.arange(len(values)), values=values,
                         dimension=len(values))


class TestRate:
    def test_uniform_ties_to_lowest(self):
        model = strict.OrdinalModel(W=np.zeros((5, 3)), b=np.zeros(5))
        rating, probs = strict.rate(model, fv(1, 2, 3))
        assert rating == 1
        np.testing.assert_allclose(probs, 0.2)

    def test_saturated_logit(self):
        model = strict.OrdinalModel(W=np.zeros((5, 2)),
                                    b=np.array([0.0, 0.0, 0.0, 0.0, 10.0]))
        rating, probs = strict.rate(model, fv(1, 1))
        assert rating == 5
        assert probs[4] == pytest.approx(1.0, abs=1e-3)

    @given(st.integers(min_value=0, max_value=10_000))
    def test_probs_sum_to_one(self, seed):
        rng = np.random.default_rng(seed)
        model = strict.OrdinalModel(W=rng.normal(size=(5, 4)), b=rng.normal(size=5))
        _, probs = strict.rate(model, fv(*rng.normal(size=4)))
        assert probs.sum() == pytest.approx(1.0, abs=1e-9)

    def test_shape_error(self):
        model = strict.OrdinalModel(W=np.zeros((5, 3)), b=np.zeros(5))
        with pytest.raises(ShapeError):
            strict.rate(model, fv(1, 2))


class TestAccept:
    def test_high_rating_high_mass(self):
        probs = np.array([0.01, 0.01, 0.03, 0.15, 0.8])
        assert strict.accept(5, probs, strict.StrictPolicy())

    def test_low_rating_rejected(self):
        probs = np.array([0.1, 0.1, 0.6, 0.1, 0.1])
        assert not strict.accept(3, probs, strict.StrictPolicy())

    def test_low_mass_rejected(self):
        probs = np.array([0.1, 0.1, 0.2, 0.35, 0.25])
        assert not strict.accept(4, probs, strict.StrictPolicy())

    @given(st.integers(min_value=1, max_value=5),
           st.floats(min_value=0, max_value=1),
           st.integers(min_value=0, max_value=9999))
    def test_monotone_in_policy(self, min_rating, min_mass, seed):
        # Tightening either knob never turns a reject into an accept.
        rng = np.random.default_rng(seed)
        probs = rng.dirichlet(np.ones(5))
        rating = int(np.argmax(probs)) + 1
        loose = strict.StrictPolicy(min_rating=min_rating, min_mass=min_mass)
        if min_rating < 5:
            tighter = strict.StrictPolicy(min_rating=min_rating + 1, min_mass=min_mass)
            assert not (strict.accept(rating, probs, tighter)
                        and not strict.accept(rating, probs, loose))
        tighter_mass = strict.StrictPolicy(min_rating=min_rating,
                                           min_mass=min(1.0, min_mass + 0.1))
        assert not (strict.accept(rating, probs, tighter_mass)
                    and not strict.accept(rating, probs, loose))

    def test_mass_complement_rule(self):
        # With defaults, mass > 0.2 on ratings {1,2,3} forces a reject.
        probs = np.array([0.15, 0.05, 0.05, 0.05, 0.7])
        assert probs[:3].sum() > 0.2
        assert not strict.accept(5, probs, strict.StrictPolicy())

    def test_policy_validation(self):
        with pytest.raises(ValueError):
            strict.StrictPolicy(min_rating=0)
        with pytest.raises(ValueError):
            strict.StrictPolicy(min_mass=1.5)


class TestTrainOrdinal:
    def test_gradient_check(self):
        rng = np.random.default_rng(0)
        model = strict.OrdinalModel(W=rng.normal(0, 0.5, (5, 8)),
                                    b=rng.normal(0, 0.5, 5))
        X = rng.normal(size=(4, 8))
        y = rng.integers(0, 5, size=4)
        analytic = strict.ce_gradients(model, X, y)
        numeric = finite_difference(lambda: strict.cross_entropy(model, X, y),
                                    [model.W, model.b])
        assert max_relative_error(analytic, numeric) < 1e-4

    def _five_clusters(self):
        # One indicator feature per rating class plus a bias slot.
        pairs = []
        for rating in range(1, 6):
            for _ in range(8):
                values = np.zeros(6)
                values[rating - 1] = 1.0
                values[5] = 1.0
                pairs.append((fv(*values), rating))
        return pairs

    def test_learns_separable_clusters(self):
        pairs = self._five_clusters()
        cfg = TrainConfig(seed=1, max_epochs=200, validation_fraction=0.0,
                          early_stop_patience=200, learning_rate=5e-2)
        model, report = strict.train_ordinal(pairs, cfg)
        assert report["train_accuracy"] == 1.0

    def test_deterministic(self):
        pairs = self._five_clusters()
        cfg = TrainConfig(seed=2, max_epochs=10, validation_fraction=0.0)
        a, _ = strict.train_ordinal(pairs, cfg)
        b, _ = strict.train_ordinal(pairs, cfg)
        np.testing.assert_array_equal(a.W, b.W)
        np.testing.assert_array_equal(a.b, b.b)

    def test_single_class_rejected(self):
        pairs = [(fv(1, 0, 1), 3) for _ in range(10)]
        with pytest.raises(DegenerateData):
            strict.train_ordinal(pairs, TrainConfig(seed=0))


class TestRemoteRate:
    def _patch_post(self, monkeypatch, handler):
        transport = httpx.MockTransport(handler)

        def post(url, json=None, timeout=None):
            with httpx.Client(transport=transport) as client:
                return client.post(url, json=json, timeout=timeout)

        monkeypatch.setattr(strict.httpx, "post", post)

    def test_schema_echo(self, monkeypatch):
        def handler(request):
            return httpx.Response(200, json={
                "ratings": [5], "probs": [[0.01, 0.01, 0.03, 0.15, 0.8]]})

        self._patch_post(monkeypatch, handler)
        rater = strict.RemoteRater(endpoint="http://ratings.test/v1/rate")
        out = strict.remote_rate(rater, ["lovely day"])
        assert out[0][0] == 5
        np.testing.assert_allclose(out[0][1], [0.01, 0.01, 0.03, 0.15, 0.8])

    def test_timeout_is_stage_failure(self, monkeypatch):
        def post(url, json=None, timeout=None):
            raise httpx.TimeoutException("too slow")

        monkeypatch.setattr(strict.httpx, "post", post)
        rater = strict.RemoteRater(endpoint="http://ratings.test/v1/rate", timeout=0.1)
        with pytest.raises(StageFailure):
            strict.remote_rate(rater, ["anything"])

    def test_bad_prob_length(self, monkeypatch):
        def handler(request):
            return httpx.Response(200, json={
                "ratings": [4], "probs": [[0.25, 0.25, 0.25, 0.25]]})

        self._patch_post(monkeypatch, handler)
        rater = strict.RemoteRater(endpoint="http://ratings.test/v1/rate")
        with pytest.raises(StageFailure):
            strict.remote_rate(rater, ["text"])

    def test_non_200(self, monkeypatch):
        def handler(request):
            return httpx.Response(500, text="boom")

        self._patch_post(monkeypatch, handler)
        rater = strict.RemoteRater(endpoint="http://ratings.test/v1/rate")
        with pytest.raises(StageFailure):
            strict.remote_rate(rater, ["text"])

    def test_length_mismatch(self, monkeypatch):
        def handler(request):
            return httpx.Response(200, json={"ratings": [4, 5], "probs": [[0.2] * 5] * 2})

        self._patch_post(monkeypatch, handler)
        rater = strict.RemoteRater(endpoint="http://ratings.test/v1/rate")
        with pytest.raises(StageFailure):
            strict.remote_rate(rater, ["one text"])

    def test_batch_limits(self):
        rater = strict.RemoteRater(endpoint="http://ratings.test/v1/rate", max_batch=2)
        with pytest.raises(StageFailure):
            strict.remote_rate(rater, [])
        with pytest.raises(StageFailure):
            strict.remote_rate(rater, ["a", "b", "c"])
