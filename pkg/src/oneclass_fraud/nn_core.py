"""
Dense-network substrate: layers, losses, Adam and exact backpropagation.

Networks are ordered lists of :class:`LayerSpec` (linear, batchnorm, relu, sigmoid)
with parameters held in float64 numpy arrays keyed ``"<layer>.<name>"``:

- linear: ``weight`` (in, out) and ``bias`` (out,), computing ``x @ W + b``
- batchnorm: ``gamma``/``beta`` parameters and ``running_mean``/``running_var`` buffers

Everything is deterministic under a seed. Train-mode forward passes normalize
with batch statistics and (optionally) fold them into the running buffers with
momentum 0.1; eval-mode passes read the buffers and mutate nothing.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Sequence, Tuple, Union

import numpy as np
import numpy.typing as npt

from oneclass_fraud.errors import ConfigError, NetworkMismatchError, ShapeError
from oneclass_fraud.models import LayerSpec, LossKind

logger = logging.getLogger(__name__)

Matrix = npt.NDArray[np.float64]
Mode = Literal["train", "eval"]

INIT_STD = 0.02
BN_EPS = 1e-5
BN_MOMENTUM = 0.1
BCE_CLAMP = 1e-7
ADAM_BETA1 = 0.5
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

# Sigmoid outputs are kept strictly inside (0, 1)
_SIGMOID_LOW = np.finfo(np.float64).tiny
_SIGMOID_HIGH = np.nextafter(1.0, 0.0)


@dataclass
class NetworkParams:
    """Layer specs with their trainable parameters and batchnorm buffers."""

    specs: List[LayerSpec]
    params: Dict[str, Matrix]
    buffers: Dict[str, Matrix] = field(default_factory=dict)
    momentum: float = BN_MOMENTUM

    @property
    def in_features(self) -> int:
        return _input_width(self.specs)

    @property
    def out_features(self) -> int:
        width = self.in_features
        for spec in self.specs:
            if spec.out_features is not None:
                width = spec.out_features
        return width

    @property
    def has_batchnorm(self) -> bool:
        return any(spec.kind == "batchnorm" for spec in self.specs)

    def copy(self) -> "NetworkParams":
        return NetworkParams(
            specs=list(self.specs),
            params={k: v.copy() for k, v in self.params.items()},
            buffers={k: v.copy() for k, v in self.buffers.items()},
            momentum=self.momentum,
        )


@dataclass
class ForwardCache:
    """Activations recorded by a forward pass, consumed by :func:`backward`."""

    mode: Mode
    specs: Tuple[LayerSpec, ...]
    records: List[Dict[str, Matrix]]
    output_shape: Tuple[int, int]


@dataclass
class Gradients:
    """Gradients for every trainable parameter and for the network input."""

    params: Dict[str, Matrix]
    input: Matrix


@dataclass
class AdamState:
    """Bias-corrected Adam accumulators shaped like a network's parameters."""

    learning_rate: float
    m: Dict[str, Matrix]
    v: Dict[str, Matrix]
    step: int = 0
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS

    @classmethod
    def for_network(cls, net: NetworkParams, learning_rate: float) -> "AdamState":
        if learning_rate <= 0:
            raise ConfigError(f"learning rate must be positive, got {learning_rate}")
        return cls(
            learning_rate=learning_rate,
            m={k: np.zeros_like(v) for k, v in net.params.items()},
            v={k: np.zeros_like(v) for k, v in net.params.items()},
        )


def _input_width(specs: Sequence[LayerSpec]) -> int:
    for spec in specs:
        if spec.in_features is not None:
            return spec.in_features
    raise ConfigError("network has no layer with dimensions")


def validate_specs(specs: Sequence[LayerSpec]) -> None:
    """
    Check that consecutive layer widths agree and sigmoid only ends a network.

    Raises:
        ConfigError: On an empty list, a width mismatch or a misplaced sigmoid
    """
    if not specs:
        raise ConfigError("network needs at least one layer")
    if specs[0].kind not in ("linear", "batchnorm"):
        raise ConfigError("first layer must be linear or batchnorm")
    width = _input_width(specs)
    for i, spec in enumerate(specs):
        if spec.kind == "sigmoid" and i != len(specs) - 1:
            raise ConfigError(f"layer {i}: sigmoid is only allowed as the final layer")
        if spec.in_features is not None:
            if spec.in_features != width:
                raise ConfigError(
                    f"layer {i} ({spec.kind}) expects width {spec.in_features}, got {width}"
                )
            width = spec.out_features if spec.out_features is not None else width


def init_network(specs: Sequence[LayerSpec], seed: int) -> NetworkParams:
    """
    Build a network with freshly initialized parameters.

    Linear weights are drawn from Normal(0, 0.02) in layer order; biases start at
    zero; batchnorm starts at gamma=1, beta=0, running mean 0, running variance 1.

    Args:
        specs: Layer specifications, dimensionally consistent
        seed: Seed of the weight generator

    Returns:
        New network; the same seed always gives bit-identical parameters
    """
    validate_specs(specs)
    rng = np.random.default_rng(seed)
    params: Dict[str, Matrix] = {}
    buffers: Dict[str, Matrix] = {}
    for i, spec in enumerate(specs):
        if spec.kind == "linear":
            assert spec.in_features is not None and spec.out_features is not None
            params[f"{i}.weight"] = rng.normal(0.0, INIT_STD, size=(spec.in_features, spec.out_features))
            params[f"{i}.bias"] = np.zeros(spec.out_features)
        elif spec.kind == "batchnorm":
            assert spec.in_features is not None
            params[f"{i}.gamma"] = np.ones(spec.in_features)
            params[f"{i}.beta"] = np.zeros(spec.in_features)
            buffers[f"{i}.running_mean"] = np.zeros(spec.in_features)
            buffers[f"{i}.running_var"] = np.ones(spec.in_features)
    return NetworkParams(specs=list(specs), params=params, buffers=buffers)


def as_matrix(batch: Union[Matrix, Sequence[Sequence[float]]], cols: int, name: str = "batch") -> Matrix:
    """Coerce to a finite 2-D float64 array with ``cols`` columns."""
    arr = np.asarray(batch, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != cols:
        raise ShapeError(f"{name} must have shape (rows, {cols}), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ShapeError(f"{name} contains NaN or infinite values")
    return arr


def sigmoid(z: Matrix) -> Matrix:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return np.clip(out, _SIGMOID_LOW, _SIGMOID_HIGH)


def forward(
    net: NetworkParams, batch: Matrix, mode: Mode, track_stats: bool = True
) -> Tuple[Matrix, ForwardCache]:
    """
    Run a batch through the network.

    Args:
        net: Network to evaluate
        batch: Input of shape (rows, in_features)
        mode: "train" normalizes with batch statistics, "eval" with running ones
        track_stats: In train mode, fold batch statistics into the running buffers.
            Pass False to use batch statistics without touching ``net``.

    Returns:
        Tuple of (output, cache)

    Raises:
        ShapeError: On a width mismatch, non-finite input, or a single-row
            train-mode batch through batchnorm
    """
    if mode not in ("train", "eval"):
        raise ConfigError(f"unknown mode: {mode!r}")
    x = as_matrix(batch, net.in_features)
    rows = x.shape[0]
    if mode == "train" and net.has_batchnorm and rows < 2:
        raise ShapeError("train-mode batchnorm needs at least 2 rows (batch variance undefined)")

    records: List[Dict[str, Matrix]] = []
    for i, spec in enumerate(net.specs):
        if spec.kind == "linear":
            records.append({"x": x})
            x = x @ net.params[f"{i}.weight"] + net.params[f"{i}.bias"]
        elif spec.kind == "batchnorm":
            gamma, beta = net.params[f"{i}.gamma"], net.params[f"{i}.beta"]
            if mode == "train":
                mean = x.mean(axis=0)
                var = x.var(axis=0)
                if track_stats:
                    m = net.momentum
                    unbiased = var * rows / (rows - 1)
                    net.buffers[f"{i}.running_mean"] = (1 - m) * net.buffers[f"{i}.running_mean"] + m * mean
                    net.buffers[f"{i}.running_var"] = (1 - m) * net.buffers[f"{i}.running_var"] + m * unbiased
            else:
                mean = net.buffers[f"{i}.running_mean"]
                var = net.buffers[f"{i}.running_var"]
            inv_std = 1.0 / np.sqrt(var + BN_EPS)
            x_hat = (x - mean) * inv_std
            records.append({"x_hat": x_hat, "inv_std": inv_std})
            x = gamma * x_hat + beta
        elif spec.kind == "relu":
            mask = x > 0
            records.append({"mask": mask})
            x = np.where(mask, x, 0.0)
        else:
            x = sigmoid(x)
            records.append({"out": x})

    cache = ForwardCache(mode=mode, specs=tuple(net.specs), records=records, output_shape=x.shape)
    return x, cache


def backward(net: NetworkParams, cache: ForwardCache, output_grad: Matrix) -> Gradients:
    """
    Backpropagate ``output_grad`` (dLoss/dOutput) through a train-mode forward pass.

    Parameters must not have changed between the forward pass and this call.

    Returns:
        Gradients for every parameter of ``net`` and for its input

    Raises:
        NetworkMismatchError: If the cache was produced by another network or in eval mode
        ShapeError: If ``output_grad`` does not match the forward output
    """
    if cache.specs != tuple(net.specs) or len(cache.records) != len(net.specs):
        raise NetworkMismatchError("activation cache does not belong to this network")
    if cache.mode != "train":
        raise NetworkMismatchError("backward needs a cache from a train-mode forward pass")
    g = np.asarray(output_grad, dtype=np.float64)
    if g.shape != cache.output_shape:
        raise ShapeError(f"output_grad shape {g.shape} != forward output {cache.output_shape}")

    grads: Dict[str, Matrix] = {}
    for i in range(len(net.specs) - 1, -1, -1):
        spec, rec = net.specs[i], cache.records[i]
        if spec.kind == "linear":
            grads[f"{i}.weight"] = rec["x"].T @ g
            grads[f"{i}.bias"] = g.sum(axis=0)
            g = g @ net.params[f"{i}.weight"].T
        elif spec.kind == "batchnorm":
            x_hat, inv_std = rec["x_hat"], rec["inv_std"]
            n = g.shape[0]
            grads[f"{i}.gamma"] = (g * x_hat).sum(axis=0)
            grads[f"{i}.beta"] = g.sum(axis=0)
            d_hat = g * net.params[f"{i}.gamma"]
            g = (inv_std / n) * (n * d_hat - d_hat.sum(axis=0) - x_hat * (d_hat * x_hat).sum(axis=0))
        elif spec.kind == "relu":
            g = np.where(rec["mask"], g, 0.0)
        else:
            s = rec["out"]
            g = g * s * (1.0 - s)
    ordered = {k: grads[k] for k in net.params}
    return Gradients(params=ordered, input=g)


def reconstruction_loss(kind: LossKind, x_hat: Matrix, x: Matrix) -> Tuple[float, Matrix]:
    """
    Mean elementwise reconstruction loss and its gradient with respect to ``x_hat``.

    - ``l2``: mean of squared differences
    - ``l1``: mean of absolute differences
    - ``smoothl1``: mean of 0.5*d^2 where |d| < 1, |d| - 0.5 elsewhere
    """
    x_hat = np.asarray(x_hat, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if x_hat.shape != x.shape:
        raise ShapeError(f"shape mismatch: {x_hat.shape} vs {x.shape}")
    n = x.size
    d = x_hat - x
    if kind == "l2":
        return float(np.mean(d * d)), 2.0 * d / n
    if kind == "l1":
        return float(np.mean(np.abs(d))), np.sign(d) / n
    if kind == "smoothl1":
        small = np.abs(d) < 1.0
        value = np.where(small, 0.5 * d * d, np.abs(d) - 0.5)
        grad = np.where(small, d, np.sign(d))
        return float(np.mean(value)), grad / n
    raise ConfigError(f"unknown loss kind: {kind!r}")


def bce(p, target):
    """
    Binary cross-entropy of probability ``p`` against a 0/1 target.

    ``p`` is clamped into [1e-7, 1 - 1e-7] before the logarithm; the derivative is
    evaluated at the clamped probability. Works elementwise on arrays; scalar
    inputs give scalar outputs.

    Returns:
        Tuple of (value, dvalue/dp)
    """
    p_arr = np.clip(np.asarray(p, dtype=np.float64), BCE_CLAMP, 1.0 - BCE_CLAMP)
    t = np.asarray(target, dtype=np.float64)
    value = -(t * np.log(p_arr) + (1.0 - t) * np.log1p(-p_arr))
    grad = -t / p_arr + (1.0 - t) / (1.0 - p_arr)
    value = np.maximum(value, 0.0)
    if value.ndim == 0:
        return float(value), float(grad)
    return value, grad


def adam_step(
    state: AdamState, params: NetworkParams, grads: Gradients
) -> Tuple[NetworkParams, AdamState]:
    """
    Apply one bias-corrected Adam update to every parameter of ``params``.

    Parameter arrays are replaced, never written in place, so snapshots taken
    before the step stay valid.

    Raises:
        NetworkMismatchError: If parameter names differ between network, state and gradients
        ShapeError: If a gradient is shaped unlike its parameter
    """
    names = set(params.params)
    if names != set(grads.params) or names != set(state.m):
        raise NetworkMismatchError("parameters, gradients and optimizer state disagree")
    state.step += 1
    t = state.step
    bias1 = 1.0 - state.beta1**t
    bias2 = 1.0 - state.beta2**t
    for name, value in params.params.items():
        g = grads.params[name]
        if g.shape != value.shape:
            raise ShapeError(f"gradient for {name} has shape {g.shape}, expected {value.shape}")
        m = state.beta1 * state.m[name] + (1.0 - state.beta1) * g
        v = state.beta2 * state.v[name] + (1.0 - state.beta2) * g * g
        state.m[name], state.v[name] = m, v
        params.params[name] = value - state.learning_rate * (m / bias1) / (np.sqrt(v / bias2) + state.eps)
    return params, state


def mlp_specs(
    in_features: int, hidden: Sequence[int], out_features: int, final: Literal["linear", "sigmoid"]
) -> List[LayerSpec]:
    """Linear → BatchNorm → ReLU blocks for each hidden width, then a linear head."""
    specs: List[LayerSpec] = []
    width = in_features
    for h in hidden:
        specs += [LayerSpec.linear(width, h), LayerSpec.batchnorm(h), LayerSpec.relu()]
        width = h
    specs.append(LayerSpec.linear(width, out_features))
    if final == "sigmoid":
        specs.append(LayerSpec.sigmoid())
    return specs
