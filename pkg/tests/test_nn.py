import math

import numpy as np
import numpy.testing as npt
import pytest

from dct import nn


def scalar_lstm_oracle(w, b, r, h_prev, c_prev):
    # Independent scalar evaluation of the cell update, math module only.
    sig = lambda z: 1.0 / (1.0 + math.exp(-z))
    i = sig(w * r + w * h_prev + b)
    f = sig(w * r + w * h_prev + b)
    g = math.tanh(w * r + w * h_prev + b)
    o = sig(w * r + w * h_prev + b)
    c = f * c_prev + i * g
    h = o * math.tanh(c)
    return h, c


def make_lstm(hidden, inp, fill=0.0, bias=0.0):
    m = lambda: np.full((hidden, inp), fill, dtype=float)
    h = lambda: np.full((hidden, hidden), fill, dtype=float)
    v = lambda: np.full(hidden, bias, dtype=float)
    return nn.LstmParameters(
        w_ei=m(), w_hi=h(), b_i=v(), w_ef=m(), w_hf=h(), b_f=v(),
        w_ec=m(), w_hc=h(), b_c=v(), w_eo=m(), w_ho=h(), b_o=v(),
    )


class TestDense:
    def test_identity(self):
        x = np.array([1.5, -2.0, 0.25])
        npt.assert_array_equal(nn.dense(x, np.eye(3), np.zeros(3)), x)

    def test_zero_map_returns_bias(self):
        b = np.array([3.0, -1.0])
        npt.assert_array_equal(nn.dense(np.ones(4), np.zeros((2, 4)), b), b)

    def test_hand_case(self):
        w = np.array([[1.0, 2.0], [3.0, 4.0]])
        npt.assert_allclose(
            nn.dense(np.array([1.0, 1.0]), w, np.zeros(2)), [3.0, 7.0], atol=1e-15
        )

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            nn.dense(np.ones(3), np.ones((2, 4)), np.zeros(2))
        with pytest.raises(ValueError):
            nn.dense(np.ones(4), np.ones((2, 4)), np.zeros(3))


class TestLstmStep:
    def test_all_zero_parameters(self):
        p = make_lstm(3, 2)
        state = nn.lstm_step(np.array([5.0, -3.0]), nn.LstmState.zeros(3), p)
        npt.assert_array_equal(state.h, np.zeros(3))
        npt.assert_array_equal(state.c, np.zeros(3))

    def test_scalar_hand_oracle(self):
        p = make_lstm(1, 1, fill=1.0, bias=1.0)
        state = nn.lstm_step(np.array([1.0]), nn.LstmState.zeros(1), p)
        h, c = scalar_lstm_oracle(1.0, 1.0, 1.0, 0.0, 0.0)
        assert abs(state.c[0] - c) < 1e-9
        assert abs(state.h[0] - h) < 1e-9
        # frozen approximate values for the same case
        assert abs(1.0 / (1.0 + math.exp(-2.0)) - 0.8808) < 1e-4
        assert abs(state.c[0] - 0.8491) < 1e-4
        assert abs(state.h[0] - 0.6083) < 1e-4

    def test_saturated_gates_keep_cell(self):
        # forget gate forced to 1, input gate forced to 0
        p = make_lstm(2, 2, fill=0.3)
        p.b_f[:] = 50.0
        p.b_i[:] = -50.0
        prev = nn.LstmState(h=np.array([0.1, -0.2]), c=np.array([0.7, -1.3]))
        state = nn.lstm_step(np.array([0.5, 0.5]), prev, p)
        npt.assert_allclose(state.c, prev.c, atol=1e-6)

    def test_gate_ranges_and_output_bound(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            core = nn.init_core(3, 2, 4, 3, rng)
            x = rng.uniform(-5, 5, size=(6, 3))
            rec = nn.forward_pass(rng.uniform(-1, 1, 3), x, core)
            for g in (rec.gate_i, rec.gate_f, rec.gate_o):
                assert np.all(g > 0) and np.all(g < 1)
            assert np.all(np.abs(rec.hiddens) < 1)

    def test_shape_mismatch(self):
        p = make_lstm(3, 2)
        with pytest.raises(ValueError):
            nn.lstm_step(np.ones(5), nn.LstmState.zeros(3), p)
        with pytest.raises(ValueError):
            nn.lstm_step(np.ones(2), nn.LstmState.zeros(4), p)


class TestAttention:
    def test_singleton(self):
        p = nn.AttentionParameters(w=np.array([2.0, -1.0]), b=np.array([0.3]))
        npt.assert_allclose(nn.attention_weights(np.array([[1.0, 4.0]]), p), [1.0])

    def test_identical_vectors_uniform(self):
        p = nn.AttentionParameters(w=np.array([0.5, 0.5]), b=np.array([0.1]))
        v = np.tile([1.0, 2.0], (5, 1))
        npt.assert_allclose(nn.attention_weights(v, p), np.full(5, 0.2), atol=1e-12)

    def test_hand_case(self):
        # scores tanh(u) = +-0.5, so weights are softmax(0.5, -0.5)
        a = math.atanh(0.5)
        p = nn.AttentionParameters(w=np.array([1.0]), b=np.array([0.0]))
        alphas = nn.attention_weights(np.array([[a], [-a]]), p)
        expect = 1.0 / (1.0 + math.exp(-1.0))
        assert abs(alphas[0] - expect) < 1e-9
        assert abs(alphas[1] - (1.0 - expect)) < 1e-9
        assert abs(alphas[0] - 0.7311) < 1e-4

    def test_simplex_property(self):
        rng = np.random.default_rng(42)
        for _ in range(300):
            n = int(rng.integers(1, 12))
            d = int(rng.integers(1, 6))
            v = rng.normal(0, 3, size=(n, d))
            p = nn.AttentionParameters(w=rng.normal(0, 2, d), b=rng.normal(0, 2, 1))
            alphas = nn.attention_weights(v, p)
            assert abs(alphas.sum() - 1.0) < 1e-9
            assert np.all(alphas > 0)

    def test_empty_error(self):
        p = nn.AttentionParameters(w=np.array([1.0]), b=np.array([0.0]))
        with pytest.raises(ValueError):
            nn.attention_weights(np.zeros((0, 1)), p)

    def test_width_mismatch(self):
        p = nn.AttentionParameters(w=np.array([1.0, 2.0]), b=np.array([0.0]))
        with pytest.raises(ValueError):
            nn.attention_weights(np.ones((3, 4)), p)


class TestAttentionPool:
    def test_one_hot_selects(self):
        v = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
        npt.assert_array_equal(nn.attention_pool(np.array([0.0, 1.0, 0.0]), v), v[1])

    def test_uniform_is_mean(self):
        v = np.array([[1.0, 2.0], [3.0, 4.0]])
        npt.assert_allclose(nn.attention_pool(np.array([0.5, 0.5]), v), v.mean(axis=0))

    def test_convex_hull_bounds(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            n = int(rng.integers(1, 10))
            v = rng.normal(0, 5, size=(n, 4))
            z = rng.random(n)
            alphas = z / z.sum()
            pooled = nn.attention_pool(alphas, v)
            assert np.all(pooled <= v.max(axis=0) + 1e-12)
            assert np.all(pooled >= v.min(axis=0) - 1e-12)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            nn.attention_pool(np.array([0.5, 0.5]), np.ones((3, 2)))


class TestSoftmaxBinary:
    def test_symmetric(self):
        npt.assert_allclose(nn.softmax_binary(np.zeros(2)), [0.5, 0.5], atol=1e-15)

    def test_large_logits_no_overflow(self):
        p = nn.softmax_binary(np.array([1000.0, 0.0]))
        assert np.all(np.isfinite(p))
        npt.assert_allclose(p, [1.0, 0.0], atol=1e-12)
        p = nn.softmax_binary(np.array([1e6, -1e6]))
        assert np.all(np.isfinite(p))

    def test_hand_case(self):
        npt.assert_allclose(
            nn.softmax_binary(np.array([math.log(3.0), 0.0])), [0.75, 0.25], atol=1e-12
        )

    def test_sums_to_one(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            p = nn.softmax_binary(rng.normal(0, 100, 2))
            assert abs(p.sum() - 1.0) < 1e-12

    def test_shift_invariance(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            z = rng.normal(0, 5, 2)
            c = rng.normal(0, 50)
            npt.assert_allclose(nn.softmax_binary(z + c), nn.softmax_binary(z), atol=1e-12)

    def test_wrong_width(self):
        with pytest.raises(ValueError):
            nn.softmax_binary(np.zeros(3))


class TestCrossEntropy:
    def test_perfect_prediction(self):
        assert nn.cross_entropy(np.array([1.0, 0.0]), 0) < 1e-11

    def test_symmetric(self):
        p = np.array([0.5, 0.5])
        assert abs(nn.cross_entropy(p, 0) - math.log(2.0)) < 1e-12
        assert abs(nn.cross_entropy(p, 1) - math.log(2.0)) < 1e-12

    def test_hand_case(self):
        assert abs(
            nn.cross_entropy(np.array([0.25, 0.75]), 1) - math.log(4.0 / 3.0)
        ) < 1e-12

    def test_invalid_label(self):
        with pytest.raises(ValueError):
            nn.cross_entropy(np.array([0.5, 0.5]), 2)
        with pytest.raises(ValueError):
            nn.cross_entropy(np.array([0.5, 0.5]), -1)


def random_instance(seed, n_days=4):
    rng = np.random.default_rng(seed)
    core = nn.init_core(5, 4, 3, 6, rng)
    static_raw = rng.uniform(-1, 1, 5)
    day_inputs = rng.uniform(-1, 1, (n_days, 6))
    labels = [int(rng.integers(0, 2)) for _ in range(n_days)]
    return core, static_raw, day_inputs, labels


class TestBackward:
    def test_zero_upstream_gives_zero_gradients(self):
        core, static_raw, day_inputs, _ = random_instance(3)
        rec = nn.forward_pass(static_raw, day_inputs, core)
        grads = nn.backward(rec, core, np.zeros(2), np.zeros((rec.n_days, 2)))
        for name, _ in core.tensors():
            assert not np.any(grads[name])

    def test_doubling_upstream_doubles_gradients(self):
        core, static_raw, day_inputs, _ = random_instance(4)
        rec = nn.forward_pass(static_raw, day_inputs, core)
        d_succ = np.array([0.3, -0.3])
        d_emo = np.random.default_rng(5).normal(0, 1, (rec.n_days, 2))
        g1 = nn.backward(rec, core, d_succ, d_emo)
        g2 = nn.backward(rec, core, 2 * d_succ, 2 * d_emo)
        for name, _ in core.tensors():
            npt.assert_allclose(g2[name], 2 * g1[name], rtol=1e-12, atol=1e-15)

    def test_bad_gradient_shapes(self):
        core, static_raw, day_inputs, _ = random_instance(6)
        rec = nn.forward_pass(static_raw, day_inputs, core)
        with pytest.raises(ValueError):
            nn.backward(rec, core, np.zeros(3))
        with pytest.raises(ValueError):
            nn.backward(rec, core, np.zeros(2), np.zeros((rec.n_days + 1, 2)))


class TestGradcheck:
    def test_quadratic_is_nearly_exact(self):
        theta = np.random.default_rng(0).normal(0, 1, 40)
        err = nn.gradcheck(lambda: float(np.sum(theta**2)), theta, 2.0 * theta)
        assert err < 1e-7

    def test_full_model_under_threshold(self):
        report = nn.gradcheck_model(seed=0)
        assert len(report) == 20
        assert max(report.values()) < 1e-4

    def test_zero_epsilon_rejected(self):
        theta = np.ones(3)
        with pytest.raises(ValueError):
            nn.gradcheck(lambda: 0.0, theta, theta, epsilon=0.0)

    def test_non_finite_loss_rejected(self):
        theta = np.ones(3)
        with pytest.raises(ValueError):
            nn.gradcheck(lambda: float("inf"), theta, theta)


class TestSequenceLoss:
    def test_aux_term_uses_mean_over_labeled_days(self):
        core, static_raw, day_inputs, labels = random_instance(8)
        base, rec = nn.sequence_loss(static_raw, day_inputs, 1, [None] * 4, 0.5, core)
        assert base == nn.cross_entropy(rec.head.success_probs, 1)
        full, rec = nn.sequence_loss(static_raw, day_inputs, 1, labels, 0.5, core)
        aux = np.mean([nn.cross_entropy(rec.emotion_probs[t], labels[t]) for t in range(4)])
        assert abs(full - base - 0.5 * aux) < 1e-12

    def test_empty_sequence_rejected(self):
        core, static_raw, _, _ = random_instance(9)
        with pytest.raises(ValueError):
            nn.forward_pass(static_raw, np.zeros((0, 6)), core)

    def test_gradients_match_finite_differences(self):
        core, static_raw, day_inputs, labels = random_instance(10)

        def loss_fn():
            loss, _ = nn.sequence_loss(static_raw, day_inputs, 0, labels, 0.3, core)
            return loss

        _, rec = nn.sequence_loss(static_raw, day_inputs, 0, labels, 0.3, core)
        grads = nn.sequence_gradients(rec, core, 0, labels, 0.3)
        for name, arr in core.tensors():
            assert nn.gradcheck(loss_fn, arr, grads[name], seed=1) < 1e-4, name
