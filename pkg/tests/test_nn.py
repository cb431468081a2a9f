import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hybridqml.nn import AdamState, DenseLayer, TrainingDiverged, adam_step, bce_loss, dense_forward


class TestDenseForward:
    def test_identity(self):
        layer = DenseLayer(2, 2, "identity", np.eye(2), np.zeros(2))
        np.testing.assert_allclose(dense_forward(layer, [0.3, -0.2]), [0.3, -0.2])

    def test_relu(self):
        layer = DenseLayer(2, 2, "relu", np.eye(2), np.zeros(2))
        np.testing.assert_allclose(dense_forward(layer, [-1.0, 2.0]), [0.0, 2.0])

    def test_leaky_relu(self):
        layer = DenseLayer(2, 2, "leaky_relu", np.eye(2), np.zeros(2))
        np.testing.assert_allclose(dense_forward(layer, [-1.0, 2.0]), [-0.01, 2.0])

    def test_sigmoid_saturates_without_overflow(self):
        layer = DenseLayer(1, 1, "sigmoid", np.array([[1.0]]), np.zeros(1))
        with np.errstate(over="raise"):
            assert dense_forward(layer, [-1000.0])[0] == 0.0
            assert dense_forward(layer, [1000.0])[0] == 1.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            dense_forward(DenseLayer(2, 1), [1.0, 2.0, 3.0])

    def test_unknown_activation(self):
        with pytest.raises(ValueError):
            DenseLayer(2, 1, "tanh")

    def test_backward_matches_fd(self, rng):
        layer = DenseLayer(3, 2, "leaky_relu", rng.normal(size=(2, 3)), rng.normal(size=2))
        x = rng.normal(size=(4, 3))
        g_out = rng.normal(size=(4, 2))
        flat_grad, gx = layer.backward(layer.forward(x)[1], g_out)

        def f(W, b, xx):
            return float(np.sum(g_out * layer.__class__(3, 2, "leaky_relu", W, b).forward(xx)[0]))

        h = 1e-6
        W, b = layer.weights.copy(), layer.bias.copy()
        fd_w = np.zeros_like(W)
        for idx in np.ndindex(*W.shape):
            Wp, Wm = W.copy(), W.copy()
            Wp[idx] += h
            Wm[idx] -= h
            fd_w[idx] = (f(Wp, b, x) - f(Wm, b, x)) / (2 * h)
        np.testing.assert_allclose(flat_grad[:6].reshape(2, 3), fd_w, atol=1e-6)
        fd_x = np.zeros_like(x)
        for idx in np.ndindex(*x.shape):
            xp, xm = x.copy(), x.copy()
            xp[idx] += h
            xm[idx] -= h
            fd_x[idx] = (f(W, b, xp) - f(W, b, xm)) / (2 * h)
        np.testing.assert_allclose(gx, fd_x, atol=1e-6)


class TestBCE:
    def test_half(self):
        assert bce_loss(0.5, 1) == pytest.approx(0.693147, abs=1e-6)

    def test_confident_and_right(self):
        assert bce_loss(1.0, 1) <= 1e-6

    def test_confident_and_wrong(self):
        assert bce_loss(0.9, 0) == pytest.approx(2.302585, abs=1e-6)

    @given(p=st.floats(0, 1), y=st.sampled_from([0, 1]))
    def test_non_negative(self, p, y):
        assert bce_loss(p, y) >= 0


class TestAdam:
    def test_zero_gradient(self):
        st_ = AdamState.for_params(3)
        p = np.array([1.0, -2.0, 0.5])
        adam_step(st_, p, np.zeros(3))
        np.testing.assert_array_equal(p, [1.0, -2.0, 0.5])
        assert st_.t == 1

    def test_first_step_moves_by_lr(self):
        st_ = AdamState.for_params(1, lr=0.01)
        p = np.array([0.0])
        adam_step(st_, p, np.array([1.0]))
        assert p[0] == pytest.approx(-0.01, rel=1e-6)

    def test_momentum_drift_matches_scalar_recurrence(self):
        lr, b1, b2, eps = 0.01, 0.9, 0.999, 1e-8
        st_ = AdamState.for_params(1, lr=lr)
        p = np.array([0.3])
        grads = [0.7, 0.0, 0.0]
        for g in grads:
            adam_step(st_, p, np.array([g]))
        # hand-rolled recurrence
        m = v = 0.0
        q = 0.3
        for t, g in enumerate(grads, start=1):
            m = b1 * m + (1 - b1) * g
            v = b2 * v + (1 - b2) * g * g
            q -= lr * (m / (1 - b1 ** t)) / (math.sqrt(v / (1 - b2 ** t)) + eps)
        assert p[0] == pytest.approx(q, abs=1e-15)
        assert p[0] < 0.3 - 0.01  # the two zero-gradient steps kept moving

    def test_nan_gradient_aborts(self):
        st_ = AdamState.for_params(2)
        with pytest.raises(TrainingDiverged, match="non-finite gradient"):
            adam_step(st_, np.zeros(2), np.array([0.0, np.nan]))
        assert st_.t == 0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            adam_step(AdamState.for_params(2), np.zeros(2), np.zeros(3))

    def test_second_moment_non_negative(self, rng):
        st_ = AdamState.for_params(5)
        p = np.zeros(5)
        for _ in range(20):
            adam_step(st_, p, rng.normal(size=5))
        assert np.all(st_.v >= 0)
