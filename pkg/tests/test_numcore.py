import numpy as np
import pytest

from metapl.model import MlpSpec, init_params
from metapl.numcore import (
    GradVec,
    Params,
    ShapeError,
    backprop,
    cosine_similarity,
    cross_entropy,
    forward,
    sgd_momentum_step,
    softmax_temp,
)
from metapl.verify import finite_diff_grad, relative_error_max


def small_net(shape, activation="sigmoid", values=None, seed=0):
    if values is None:
        rng = np.random.default_rng(seed)
        values = rng.normal(0.0, 0.5, sum(fi * fo + fo for fi, fo in shape))
    return Params(values=np.asarray(values, dtype=np.float64), shape=tuple(shape), activation=activation)


class TestForward:
    def test_zero_weights_broadcast_bias(self):
        p = small_net([(3, 2)], values=np.zeros(8))
        bias = np.array([0.5, -1.5])
        vals = np.concatenate([np.zeros(6), bias])
        p = p.replace_values(vals)
        x = np.random.default_rng(1).normal(size=(4, 3))
        out = forward(p, x)
        assert np.allclose(out, np.tile(bias, (4, 1)))

    def test_identity_linear_layer(self):
        vals = np.concatenate([np.eye(3).ravel(), np.zeros(3)])
        p = small_net([(3, 3)], values=vals)
        x = np.random.default_rng(2).normal(size=(5, 3))
        assert np.allclose(forward(p, x), x)

    def test_matches_straight_line_reimplementation(self):
        # independent oracle: explicit per-layer loop with no shared code
        rng = np.random.default_rng(3)
        spec = MlpSpec(2, (8, 8), 2, activation="sigmoid")
        p = init_params(spec, 7)
        x = rng.normal(size=(6, 2))
        vals = p.values
        w1 = vals[0:16].reshape(2, 8)
        b1 = vals[16:24]
        w2 = vals[24:88].reshape(8, 8)
        b2 = vals[88:96]
        w3 = vals[96:112].reshape(8, 2)
        b3 = vals[112:114]
        a1 = 1.0 / (1.0 + np.exp(-(x @ w1 + b1)))
        a2 = 1.0 / (1.0 + np.exp(-(a1 @ w2 + b2)))
        expected = a2 @ w3 + b3
        assert np.max(np.abs(forward(p, x) - expected)) < 1e-12

    def test_dimension_mismatch_raises(self):
        p = small_net([(3, 2)])
        with pytest.raises(ShapeError):
            forward(p, np.zeros((4, 5)))


class TestSoftmaxTemp:
    def test_symmetry(self):
        assert np.allclose(softmax_temp(np.array([0.0, 0.0]), 1.0), [0.5, 0.5])

    def test_low_temperature_approaches_argmax(self):
        out = softmax_temp(np.array([1.0, 0.0]), 0.01)
        assert out[0] > 0.9999

    def test_frozen_high_precision_value(self):
        # expected values computed with 50-digit arithmetic
        out = softmax_temp(np.array([1.0, 2.0, 3.0]), 0.7)
        expected = [0.044278269188587261517, 0.1847614341502956493, 0.77096029666111708918]
        assert np.max(np.abs(out - expected)) < 1e-15

    def test_shift_invariance(self):
        rng = np.random.default_rng(4)
        logits = rng.normal(size=(5, 3))
        shifted = logits + 17.3
        assert np.max(np.abs(softmax_temp(logits, 0.9) - softmax_temp(shifted, 0.9))) < 1e-12

    def test_rows_are_distributions(self):
        rng = np.random.default_rng(5)
        for tau in (0.1, 1.0, 5.0):
            out = softmax_temp(rng.normal(scale=3.0, size=(20, 4)), tau)
            assert np.all(out >= 0)
            assert np.max(np.abs(out.sum(axis=1) - 1.0)) < 1e-9

    def test_nonpositive_tau_rejected(self):
        with pytest.raises(ValueError):
            softmax_temp(np.array([1.0, 2.0]), 0.0)


class TestCrossEntropy:
    def test_near_perfect_prediction(self):
        eps = 1e-6
        pred = np.array([[1.0 - eps, eps]])
        val = cross_entropy(np.array([0]), pred)
        assert abs(val - (-np.log(1.0 - eps))) < 1e-12

    def test_uniform_self_entropy(self):
        pred = np.full((1, 2), 0.5)
        assert abs(cross_entropy(pred, pred) - np.log(2.0)) < 1e-12

    def test_matches_per_example_oracle(self):
        rng = np.random.default_rng(6)
        q = softmax_temp(rng.normal(size=(4, 3)), 1.0)
        p = softmax_temp(rng.normal(size=(4, 3)), 1.0)
        expected = np.mean([-np.sum(q[i] * np.log(p[i])) for i in range(4)])
        assert abs(cross_entropy(q, p) - expected) < 1e-12

    def test_gibbs_inequality(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            q = softmax_temp(rng.normal(scale=2.0, size=(3, 4)), 1.0)
            p = softmax_temp(rng.normal(scale=2.0, size=(3, 4)), 1.0)
            entropy = cross_entropy(q, q)
            assert cross_entropy(q, p) >= entropy - 1e-6

    def test_empty_batch_rejected(self):
        with pytest.raises(ValueError):
            cross_entropy(np.zeros((0,), dtype=np.int64), np.zeros((0, 2)))


class TestBackprop:
    def test_gradient_small_at_fit_optimum(self):
        # a net whose logits strongly match the labels has tiny gradient
        vals = np.concatenate([np.eye(2).ravel() * 30.0, np.zeros(2)])
        p = small_net([(2, 2)], values=vals)
        x = np.array([[1.0, 0.0], [0.0, 1.0]])
        y = np.array([0, 1])
        _, g = backprop(p, x, y)
        assert g.norm < 1e-6

    def test_soft_target_equal_to_prediction_zeroes_output_delta(self):
        p = init_params(MlpSpec(2, (4,), 3), 11)
        x = np.random.default_rng(8).normal(size=(5, 2))
        probs = softmax_temp(forward(p, x), 1.0)
        _, g = backprop(p, x, probs)
        # output bias gradient is the summed output delta
        assert np.max(np.abs(g.values[-3:])) < 1e-12

    @pytest.mark.parametrize("activation", ["sigmoid", "relu"])
    @pytest.mark.parametrize("hidden", [(), (5,), (6, 4)])
    def test_matches_finite_differences(self, activation, hidden):
        rng = np.random.default_rng(hash((activation, hidden)) % (1 << 32))
        spec = MlpSpec(3, hidden, 2, activation=activation)
        p = Params(
            values=rng.normal(0.0, 0.5, spec.param_count()),
            shape=spec.layer_shapes(),
            activation=activation,
        )
        x = rng.normal(size=(4, 3))
        y = rng.integers(0, 2, 4)
        _, g = backprop(p, x, y)
        fd = finite_diff_grad(lambda q: backprop(q, x, y)[0], p)
        assert relative_error_max(g.values, fd.values) < 1e-4


class TestSgdMomentum:
    def test_zero_gradient_keeps_params(self):
        p = small_net([(2, 2)], seed=9)
        g = GradVec(np.zeros_like(p.values))
        p2, _ = sgd_momentum_step(p, g, 0.1, 0.9, GradVec(np.zeros_like(p.values)))
        assert np.array_equal(p2.values, p.values)

    def test_single_step_arithmetic(self):
        # layout for a single (1,1) layer is [w, b]
        p = Params(values=np.array([1.0, 0.0]), shape=((1, 1),), activation="sigmoid")
        g = GradVec(np.array([2.0, 0.0]))
        buf = GradVec(np.zeros(2))
        p2, _ = sgd_momentum_step(p, g, 0.1, 0.0, buf)
        assert np.allclose(p2.values, [0.8, 0.0])

    def test_trajectory_matches_scalar_recursion(self):
        # independent oracle: scalar recursion of the same update rule
        lr, mu = 0.05, 0.9
        theta = 1.0
        buf = 0.0
        p = Params(values=np.array([1.0, 0.0]), shape=((1, 1),), activation="sigmoid")
        vbuf = GradVec(np.zeros(2))
        for _ in range(10):
            grad = 2.0 * theta  # gradient of theta^2 on a 1-D quadratic
            buf = mu * buf + grad
            theta = theta - lr * (grad + mu * buf)
            gv = GradVec(np.array([2.0 * p.values[0], 0.0]))
            p, vbuf = sgd_momentum_step(p, gv, lr, mu, vbuf)
            assert abs(p.values[0] - theta) < 1e-12

    def test_invalid_hyperparameters_rejected(self):
        p = small_net([(1, 2)], seed=10)
        g = GradVec(np.zeros_like(p.values))
        with pytest.raises(ValueError):
            sgd_momentum_step(p, g, 0.0, 0.0, g)
        with pytest.raises(ValueError):
            sgd_momentum_step(p, g, 0.1, 1.0, g)


class TestCosineSimilarity:
    def test_identical_vectors(self):
        a = GradVec(np.array([1.0, 2.0, 3.0]))
        assert cosine_similarity(a, a) == pytest.approx(1.0)

    def test_opposite_vectors(self):
        a = GradVec(np.array([1.0, -2.0]))
        b = GradVec(np.array([-1.0, 2.0]))
        assert cosine_similarity(a, b) == pytest.approx(-1.0)

    def test_zero_norm_convention(self):
        a = GradVec(np.zeros(3))
        b = GradVec(np.array([1.0, 0.0, 0.0]))
        assert cosine_similarity(a, b) == 0.0

    def test_bounded_symmetric_scale_invariant(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            a = GradVec(rng.normal(size=7))
            b = GradVec(rng.normal(size=7))
            c = cosine_similarity(a, b)
            assert -1.0 <= c <= 1.0
            assert cosine_similarity(b, a) == pytest.approx(c)
            scaled = GradVec(3.7 * a.values)
            assert cosine_similarity(scaled, b) == pytest.approx(c)


def test_params_length_invariant_enforced():
    with pytest.raises(ShapeError):
        Params(values=np.zeros(5), shape=((2, 2),), activation="sigmoid")


def test_gradient_check_sweep_random_nets():
    # networks up to 200 parameters, mixed activations and depths
    rng = np.random.default_rng(123)
    worst = 0.0
    for _ in range(20):
        d = int(rng.integers(1, 6))
        k = int(rng.integers(2, 5))
        hidden = tuple(int(rng.integers(2, 9)) for _ in range(int(rng.integers(0, 3))))
        act = "sigmoid" if rng.random() < 0.5 else "relu"
        spec = MlpSpec(d, hidden, k, activation=act)
        if spec.param_count() > 200:
            continue
        p = Params(
            values=rng.normal(0.0, 0.5, spec.param_count()),
            shape=spec.layer_shapes(),
            activation=act,
        )
        x = rng.normal(size=(3, d))
        y = rng.integers(0, k, 3)
        _, g = backprop(p, x, y)
        fd = finite_diff_grad(lambda q: backprop(q, x, y)[0], p)
        worst = max(worst, relative_error_max(g.values, fd.values))
    assert worst < 1e-4
