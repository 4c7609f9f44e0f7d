import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uplift import lstm
from uplift.errors import DegenerateData, ShapeError, StateError
from uplift.features import TokenSequence
from uplift.optim import TrainConfig

from conftest import finite_difference, max_relative_error


def zeroed(params):
    for name in lstm._PARAM_NAMES:
        setattr(params, name, np.zeros_like(getattr(params, name)))
    return params


def small_params(seed, vocab=8, embed=3, hidden=4, head=3, dropout=0.0):
    params = lstm.new_lstm(vocab, embed_dim=embed, hidden=hidden, head=head,
                           dropout_rate=dropout, seed=seed)
    # Randomized head bias keeps ReLU pre-activations off the kink.
    params.b1 = np.random.default_rng(seed + 99).normal(0, 0.5, params.b1.shape)
    return params


class TestInit:
    def test_forget_bias_starts_at_one(self):
        params = lstm.new_lstm(10, embed_dim=4, hidden=6, head=3, seed=0)
        np.testing.assert_array_equal(params.b_f, np.ones(6))

    def test_padding_row_frozen_at_zero(self):
        params = lstm.new_lstm(10, embed_dim=4, hidden=6, head=3, seed=0)
        np.testing.assert_array_equal(params.E[0], np.zeros(4))


class TestCell:
    def test_zero_params_zero_state(self):
        params = zeroed(lstm.new_lstm(4, embed_dim=3, hidden=4, head=2, seed=0))
        h, c = lstm.lstm_cell(np.ones(3), np.zeros(4), np.zeros(4), params)
        np.testing.assert_array_equal(c, np.zeros(4))
        np.testing.assert_array_equal(h, np.zeros(4))

    def test_memory_carry_with_saturated_gates(self):
        # f -> 1 and i -> 0 via +/-50 biases; with the candidate gate zeroed
        # the cell state must carry over bit-exactly.
        params = zeroed(lstm.new_lstm(4, embed_dim=3, hidden=4, head=2, seed=0))
        params.b_f = np.full(4, 50.0)
        params.b_i = np.full(4, -50.0)
        c_prev = np.array([1.0, -0.5, 2.0, 0.25])
        _, c = lstm.lstm_cell(np.ones(3), np.zeros(4), c_prev, params)
        np.testing.assert_array_equal(c, c_prev)

    def test_shape_error(self):
        params = lstm.new_lstm(4, embed_dim=3, hidden=4, head=2, seed=0)
        with pytest.raises(ShapeError):
            lstm.lstm_cell(np.ones(5), np.zeros(4), np.zeros(4), params)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(min_value=0, max_value=10_000))
    def test_hidden_state_bounded(self, seed):
        rng = np.random.default_rng(seed)
        params = lstm.new_lstm(4, embed_dim=3, hidden=4, head=2, seed=seed)
        h, _ = lstm.lstm_cell(rng.normal(scale=5, size=3),
                              rng.normal(scale=5, size=4),
                              rng.normal(scale=5, size=4), params)
        assert np.all(np.abs(h) < 1.0)


class TestPredict:
    def test_all_padding_zero_params(self):
        params = zeroed(lstm.new_lstm(4, embed_dim=3, hidden=4, head=2, seed=0))
        seq = TokenSequence(indices=np.zeros(5, dtype=np.int64), length_unpadded=0)
        assert lstm.lstm_predict(params, seq) == 0.5

    def test_infer_deterministic(self):
        params = lstm.new_lstm(8, embed_dim=4, hidden=4, head=2, seed=1)
        seq = TokenSequence(indices=np.array([0, 0, 2, 5, 7]), length_unpadded=3)
        assert lstm.lstm_predict(params, seq) == lstm.lstm_predict(params, seq)

    def test_dropout_zero_matches_infer(self):
        params = lstm.new_lstm(8, embed_dim=4, hidden=4, head=2,
                               dropout_rate=0.0, seed=1)
        seq = TokenSequence(indices=np.array([2, 3, 4]), length_unpadded=3)
        rng = np.random.default_rng(0)
        assert (lstm.lstm_predict(params, seq, mode="train", rng=rng)
                == lstm.lstm_predict(params, seq, mode="infer"))

    def test_index_out_of_range(self):
        params = lstm.new_lstm(4, embed_dim=3, hidden=4, head=2, seed=0)
        with pytest.raises(ShapeError):
            lstm.lstm_predict(params, TokenSequence(indices=np.array([9]),
                                                    length_unpadded=1))


class TestBackward:
    def test_gradient_check(self):
        rng = np.random.default_rng(3)
        for seed in range(4):
            params = small_params(seed)
            ids = rng.integers(0, 8, size=(1, 6))
            y = np.array([float(rng.integers(2))])

            def loss():
                probs, _ = lstm.lstm_forward(params, ids)
                p = np.clip(probs, 1e-12, 1 - 1e-12)
                return float(np.mean(-(y * np.log(p) + (1 - y) * np.log(1 - p))))

            _, trace = lstm.lstm_forward(params, ids)
            analytic = lstm.lstm_backward(params, trace, y)
            skip = lambda k, idx: k == 0 and idx[0] == 0  # frozen padding row
            numeric = finite_difference(loss, params.params(), skip=skip)
            assert max_relative_error(analytic, numeric, skip=skip) < 1e-4

    def test_padding_row_gradient_zero(self):
        params = small_params(0)
        ids = np.array([[0, 0, 2, 3]])
        _, trace = lstm.lstm_forward(params, ids)
        grads = lstm.lstm_backward(params, trace, np.array([1.0]))
        np.testing.assert_array_equal(grads[0][0], np.zeros(3))

    def test_missing_trace(self):
        params = small_params(0)
        with pytest.raises(StateError):
            lstm.lstm_backward(params, None, np.array([1.0]))

    def test_repeated_sequence_batch_matches_single(self):
        params = small_params(1)
        ids = np.array([[2, 3, 4, 5]])
        y1 = np.array([1.0])
        _, trace1 = lstm.lstm_forward(params, ids)
        single = lstm.lstm_backward(params, trace1, y1)
        doubled = np.vstack([ids, ids])
        _, trace2 = lstm.lstm_forward(params, doubled)
        batched = lstm.lstm_backward(params, trace2, np.array([1.0, 1.0]))
        for a, b in zip(single, batched):
            np.testing.assert_allclose(a, b, atol=1e-12)

    def test_clipping(self):
        grads = [np.full((3, 3), 10.0), np.full(3, -7.0)]
        clipped = lstm.clip_global_norm(grads)
        norm = np.sqrt(sum(float(np.sum(g * g)) for g in clipped))
        assert norm <= lstm.GRAD_CLIP + 1e-9
        # Direction preserved: clipped is a positive scaling of the input.
        ratio = clipped[0][0, 0] / grads[0][0, 0]
        np.testing.assert_allclose(clipped[1], grads[1] * ratio)

    def test_no_clip_below_threshold(self):
        grads = [np.array([0.1, 0.2])]
        out = lstm.clip_global_norm(grads)
        np.testing.assert_array_equal(out[0], grads[0])


class TestTrain:
    def _containment_task(self, n, seed):
        # Label 1 iff token index 2 ("good") appears in a 6-token sequence.
        rng = np.random.default_rng(seed)
        pairs = []
        for _ in range(n):
            ids = rng.integers(3, 12, size=6)
            has = bool(rng.random() < 0.5)
            if has:
                ids[rng.integers(6)] = 2
            pairs.append((TokenSequence(indices=ids.astype(np.int64),
                                        length_unpadded=6), int(has)))
        return pairs

    def test_learns_containment(self):
        train = self._containment_task(500, seed=5)
        test = self._containment_task(200, seed=6)
        cfg = TrainConfig(seed=11, max_epochs=40, early_stop_patience=5,
                          learning_rate=3e-3)
        params, _ = lstm.train_lstm(train, cfg, vocab_size=12, embed_dim=8,
                                    hidden=16, head=8, dropout_rate=0.2)
        ids = np.stack([s.indices for s, _ in test])
        y = np.array([label for _, label in test])
        accuracy = np.mean((lstm.predict_batch(params, ids) >= 0.5) == y)
        assert accuracy >= 0.95

    def test_deterministic(self):
        train = self._containment_task(60, seed=2)
        cfg = TrainConfig(seed=4, max_epochs=3)
        a, _ = lstm.train_lstm(train, cfg, vocab_size=12, embed_dim=4,
                               hidden=6, head=4)
        b, _ = lstm.train_lstm(train, cfg, vocab_size=12, embed_dim=4,
                               hidden=6, head=4)
        for pa, pb in zip(a.params(), b.params()):
            np.testing.assert_array_equal(pa, pb)

    def test_single_class_rejected(self):
        pairs = [(TokenSequence(indices=np.array([2, 3]), length_unpadded=2), 1)
                 for _ in range(10)]
        with pytest.raises(DegenerateData):
            lstm.train_lstm(pairs, TrainConfig(seed=0), vocab_size=12)
