"""
Tests for the dense-network substrate.

Gradients are checked against central finite differences at 64-bit precision;
layer semantics against their definitions.
"""

import numpy as np
import pytest

from oneclass_fraud.errors import ConfigError, NetworkMismatchError, ShapeError
from oneclass_fraud.models import LayerSpec
from oneclass_fraud.nn_core import (
    AdamState,
    Gradients,
    NetworkParams,
    adam_step,
    backward,
    bce,
    forward,
    init_network,
    mlp_specs,
    reconstruction_loss,
    validate_specs,
)


def widened(net: NetworkParams, seed: int) -> NetworkParams:
    """Copy of ``net`` with O(1) weights so gradients are far from zero."""
    rng = np.random.default_rng(seed)
    out = net.copy()
    for name, value in out.params.items():
        if name.endswith(".weight"):
            out.params[name] = rng.normal(0.0, 0.5, size=value.shape)
        elif name.endswith(".gamma"):
            out.params[name] = rng.uniform(0.5, 1.5, size=value.shape)
        else:
            out.params[name] = rng.normal(0.0, 0.1, size=value.shape)
    return out


def numeric_gradients(net: NetworkParams, x: np.ndarray, probe: np.ndarray, h: float = 1e-5):
    """Central differences of sum(forward(x) * probe) for every parameter and input."""

    def objective(n: NetworkParams, inp: np.ndarray) -> float:
        out, _ = forward(n, inp, "train", track_stats=False)
        return float(np.sum(out * probe))

    grads = {}
    for name, value in net.params.items():
        g = np.zeros_like(value)
        for idx in np.ndindex(value.shape):
            plus, minus = net.copy(), net.copy()
            plus.params[name] = value.copy()
            plus.params[name][idx] += h
            minus.params[name] = value.copy()
            minus.params[name][idx] -= h
            g[idx] = (objective(plus, x) - objective(minus, x)) / (2 * h)
        grads[name] = g
    g_in = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        xp, xm = x.copy(), x.copy()
        xp[idx] += h
        xm[idx] -= h
        g_in[idx] = (objective(net, xp) - objective(net, xm)) / (2 * h)
    return grads, g_in


class TestInitNetwork:
    """Parameter initialization."""

    def test_same_seed_gives_identical_parameters(self):
        specs = mlp_specs(28, [16, 8], 1, "sigmoid")
        a, b = init_network(specs, 42), init_network(specs, 42)
        assert a.params.keys() == b.params.keys()
        for name in a.params:
            assert a.params[name].tobytes() == b.params[name].tobytes()

    def test_batchnorm_identity_init(self):
        net = init_network([LayerSpec.linear(4, 8), LayerSpec.batchnorm(8)], 0)
        assert np.all(net.params["1.gamma"] == 1.0)
        assert np.all(net.params["1.beta"] == 0.0)
        assert np.all(net.buffers["1.running_mean"] == 0.0)
        assert np.all(net.buffers["1.running_var"] == 1.0)

    def test_linear_weights_follow_normal_002(self):
        net = init_network([LayerSpec.linear(28, 16)], 1)
        w = net.params["0.weight"]
        assert w.shape == (28, 16)
        assert abs(w.mean()) < 3 * 0.02 / np.sqrt(448)
        assert w.std() == pytest.approx(0.02, rel=0.15)
        assert np.all(net.params["0.bias"] == 0.0)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ConfigError):
            init_network([LayerSpec.linear(28, 16), LayerSpec.linear(8, 1)], 0)

    def test_sigmoid_only_last(self):
        with pytest.raises(ConfigError):
            validate_specs([LayerSpec.linear(2, 2), LayerSpec.sigmoid(), LayerSpec.linear(2, 1)])


class TestForward:
    """Forward pass semantics per layer kind."""

    def test_identity_linear(self):
        net = init_network([LayerSpec.linear(3, 3)], 0)
        net.params["0.weight"] = np.eye(3)
        x = np.array([[1.0, -2.0, 3.5]])
        out, _ = forward(net, x, "eval")
        np.testing.assert_array_equal(out, x)

    def test_sigmoid_of_zero_is_half(self):
        net = init_network([LayerSpec.linear(5, 2), LayerSpec.sigmoid()], 0)
        net.params["0.weight"] = np.zeros((5, 2))
        out, _ = forward(net, np.ones((3, 5)), "eval")
        np.testing.assert_array_equal(out, np.full((3, 2), 0.5))

    def test_sigmoid_outputs_stay_open(self):
        net = init_network([LayerSpec.linear(1, 1), LayerSpec.sigmoid()], 0)
        net.params["0.weight"] = np.array([[1.0]])
        out, _ = forward(net, np.array([[-800.0], [800.0]]), "eval")
        assert np.all(out > 0.0) and np.all(out < 1.0)

    def test_batchnorm_train_normalizes_columns(self):
        rng = np.random.default_rng(0)
        net = init_network([LayerSpec.batchnorm(28)], 0)
        x = 20.0 * rng.standard_normal((64, 28)) + 5.0
        out, _ = forward(net, x, "train")
        np.testing.assert_allclose(out.mean(axis=0), 0.0, atol=1e-10)
        np.testing.assert_allclose(out.var(axis=0), 1.0, atol=1e-6)

    def test_train_mode_updates_running_stats(self):
        rng = np.random.default_rng(1)
        net = init_network([LayerSpec.batchnorm(3)], 0)
        x = rng.standard_normal((10, 3))
        forward(net, x, "train")
        np.testing.assert_allclose(net.buffers["0.running_mean"], 0.1 * x.mean(axis=0))
        np.testing.assert_allclose(net.buffers["0.running_var"], 0.9 + 0.1 * x.var(axis=0, ddof=1))

    def test_eval_and_untracked_train_mutate_nothing(self):
        rng = np.random.default_rng(2)
        net = init_network(mlp_specs(6, [4], 2, "linear"), 0)
        before = {k: v.copy() for k, v in net.buffers.items()}
        x = rng.standard_normal((5, 6))
        forward(net, x, "eval")
        forward(net, x, "train", track_stats=False)
        for name, value in before.items():
            np.testing.assert_array_equal(net.buffers[name], value)

    def test_single_row_train_batch_rejected(self):
        net = init_network(mlp_specs(6, [4], 2, "linear"), 0)
        with pytest.raises(ShapeError):
            forward(net, np.zeros((1, 6)), "train")

    def test_width_mismatch_rejected(self):
        net = init_network([LayerSpec.linear(28, 4)], 0)
        with pytest.raises(ShapeError):
            forward(net, np.zeros((2, 27)), "eval")

    def test_non_finite_input_rejected(self):
        net = init_network([LayerSpec.linear(2, 2)], 0)
        with pytest.raises(ShapeError):
            forward(net, np.array([[np.nan, 0.0]]), "eval")


class TestBackward:
    """Exact gradients."""

    @pytest.mark.slow
    @pytest.mark.parametrize("draw", range(20))
    def test_matches_finite_differences(self, draw):
        rng = np.random.default_rng(100 + draw)
        for specs in (mlp_specs(28, [8, 4], 1, "sigmoid"), mlp_specs(28, [6, 3, 6], 28, "linear")):
            net = widened(init_network(specs, draw), draw)
            x = rng.standard_normal((4, 28))
            out, cache = forward(net, x, "train", track_stats=False)
            probe = rng.standard_normal(out.shape)
            grads = backward(net, cache, probe)
            numeric, numeric_input = numeric_gradients(net, x, probe)
            for name in net.params:
                np.testing.assert_allclose(grads.params[name], numeric[name], rtol=1e-4, atol=1e-8, err_msg=name)
            np.testing.assert_allclose(grads.input, numeric_input, rtol=1e-4, atol=1e-8)

    def test_zero_output_grad_gives_zero_gradients(self):
        net = init_network(mlp_specs(5, [4], 3, "linear"), 0)
        out, cache = forward(net, np.random.default_rng(0).standard_normal((3, 5)), "train")
        grads = backward(net, cache, np.zeros_like(out))
        for g in grads.params.values():
            assert np.all(g == 0.0)

    def test_relu_blocks_negative_preactivations(self):
        net = init_network([LayerSpec.linear(2, 2), LayerSpec.relu()], 0)
        net.params["0.weight"] = np.eye(2)
        out, cache = forward(net, np.array([[-1.0, 2.0], [-3.0, 0.5]]), "train")
        grads = backward(net, cache, np.ones_like(out))
        np.testing.assert_array_equal(grads.input[:, 0], 0.0)
        np.testing.assert_array_equal(grads.input[:, 1], 1.0)

    def test_cache_from_other_network_rejected(self):
        a = init_network(mlp_specs(4, [3], 1, "sigmoid"), 0)
        b = init_network(mlp_specs(4, [5], 1, "sigmoid"), 0)
        out, cache = forward(a, np.ones((2, 4)), "train")
        with pytest.raises(NetworkMismatchError):
            backward(b, cache, np.ones_like(out))

    def test_eval_cache_rejected(self):
        net = init_network([LayerSpec.linear(2, 1)], 0)
        out, cache = forward(net, np.ones((2, 2)), "eval")
        with pytest.raises(NetworkMismatchError):
            backward(net, cache, np.ones_like(out))


class TestReconstructionLoss:
    """L1 / SmoothL1 / L2 means."""

    @pytest.mark.parametrize("kind", ["l1", "smoothl1", "l2"])
    def test_perfect_reconstruction(self, kind):
        x = np.random.default_rng(0).standard_normal((3, 28))
        value, grad = reconstruction_loss(kind, x.copy(), x)
        assert value == 0.0
        assert np.all(grad == 0.0)

    def test_l2_single_difference(self):
        x = np.zeros((1, 28))
        x_hat = x.copy()
        x_hat[0, 0] = 2.0
        value, _ = reconstruction_loss("l2", x_hat, x)
        assert value == pytest.approx(4 / 28)

    def test_l1_single_difference(self):
        x_hat = np.zeros((1, 28))
        x_hat[0, 0] = 2.0
        value, _ = reconstruction_loss("l1", x_hat, np.zeros((1, 28)))
        assert value == pytest.approx(2 / 28)

    def test_smoothl1_branches(self):
        x_hat = np.zeros((1, 2))
        x_hat[0] = [0.5, 3.0]
        value, _ = reconstruction_loss("smoothl1", x_hat, np.zeros((1, 2)))
        assert value == pytest.approx((0.125 + 2.5) / 2)

    @pytest.mark.parametrize("kind", ["l1", "smoothl1", "l2"])
    def test_gradient_matches_value(self, kind):
        rng = np.random.default_rng(5)
        x, x_hat = rng.standard_normal((3, 4)), 2 * rng.standard_normal((3, 4))
        _, grad = reconstruction_loss(kind, x_hat, x)
        h = 1e-6
        for idx in np.ndindex(x_hat.shape):
            plus, minus = x_hat.copy(), x_hat.copy()
            plus[idx] += h
            minus[idx] -= h
            numeric = (reconstruction_loss(kind, plus, x)[0] - reconstruction_loss(kind, minus, x)[0]) / (2 * h)
            assert grad[idx] == pytest.approx(numeric, rel=1e-5, abs=1e-9)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            reconstruction_loss("l2", np.zeros((2, 3)), np.zeros((3, 2)))

    def test_unknown_kind(self):
        with pytest.raises(ConfigError):
            reconstruction_loss("huber", np.zeros((1, 1)), np.zeros((1, 1)))


class TestBce:
    """Clamped binary cross-entropy."""

    def test_half_against_one(self):
        value, grad = bce(0.5, 1)
        assert value == pytest.approx(0.693147, abs=1e-6)
        assert grad == pytest.approx(-2.0)

    def test_confident_wrong(self):
        value, _ = bce(0.9, 0)
        assert value == pytest.approx(2.302585, abs=1e-6)

    def test_near_certain_is_near_zero(self):
        value, _ = bce(1.0, 1)
        assert 0.0 <= value < 1e-6

    def test_clamp_removes_singularity(self):
        value, grad = bce(0.0, 1)
        assert np.isfinite(value) and np.isfinite(grad)
        assert value == pytest.approx(-np.log(1e-7))

    def test_array_inputs_non_negative(self):
        p = np.linspace(0.0, 1.0, 11).reshape(-1, 1)
        values, grads = bce(p, 1.0)
        assert values.shape == p.shape == grads.shape
        assert np.all(values >= 0.0)


class TestAdam:
    """Bias-corrected Adam."""

    def _net(self):
        return init_network(mlp_specs(3, [2], 1, "linear"), 0)

    def test_zero_gradients_leave_parameters(self):
        net = self._net()
        before = {k: v.copy() for k, v in net.params.items()}
        state = AdamState.for_network(net, 1e-2)
        zeros = Gradients(params={k: np.zeros_like(v) for k, v in net.params.items()}, input=np.zeros((1, 3)))
        adam_step(state, net, zeros)
        for name, value in before.items():
            np.testing.assert_array_equal(net.params[name], value)
        assert state.step == 1

    def test_first_step_moves_by_learning_rate(self):
        net = self._net()
        before = {k: v.copy() for k, v in net.params.items()}
        state = AdamState.for_network(net, 1e-3)
        grads = Gradients(params={k: np.full_like(v, 0.37) for k, v in net.params.items()}, input=np.zeros((1, 3)))
        adam_step(state, net, grads)
        for name, value in before.items():
            np.testing.assert_allclose(value - net.params[name], 1e-3, rtol=1e-6)

    def test_parameters_replaced_not_mutated(self):
        net = self._net()
        snapshot = net.params["0.weight"]
        copy = snapshot.copy()
        state = AdamState.for_network(net, 1e-2)
        grads = Gradients(params={k: np.ones_like(v) for k, v in net.params.items()}, input=np.zeros((1, 3)))
        adam_step(state, net, grads)
        np.testing.assert_array_equal(snapshot, copy)
        assert net.params["0.weight"] is not snapshot

    def test_deterministic(self):
        rng = np.random.default_rng(9)
        grads = {k: rng.standard_normal(v.shape) for k, v in self._net().params.items()}
        results = []
        for _ in range(2):
            net = self._net()
            state = AdamState.for_network(net, 1e-2)
            for _ in range(3):
                adam_step(state, net, Gradients(params=grads, input=np.zeros((1, 3))))
            results.append(net)
        for name in grads:
            assert results[0].params[name].tobytes() == results[1].params[name].tobytes()

    def test_mismatched_gradients_rejected(self):
        net = self._net()
        state = AdamState.for_network(net, 1e-2)
        with pytest.raises(NetworkMismatchError):
            adam_step(state, net, Gradients(params={"0.weight": np.zeros((3, 2))}, input=np.zeros((1, 3))))

    def test_wrong_gradient_shape_rejected(self):
        net = self._net()
        state = AdamState.for_network(net, 1e-2)
        bad = {k: np.zeros_like(v) for k, v in net.params.items()}
        bad["0.weight"] = np.zeros((2, 3))
        with pytest.raises(ShapeError):
            adam_step(state, net, Gradients(params=bad, input=np.zeros((1, 3))))

    def test_non_positive_learning_rate(self):
        with pytest.raises(ConfigError):
            AdamState.for_network(self._net(), 0.0)
