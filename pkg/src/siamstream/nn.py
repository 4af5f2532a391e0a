"""Dense neural networks in plain numpy.

Everything downstream (siamese pair scoring, softmax classifiers) is built
from the same ingredients: fully connected layers with leaky-ReLU hidden
activations, He-normal initialisation, cross-entropy losses, and Adam.
Networks are small and updated one epoch at a time, so the whole engine
stays in float64 and favours exactness over throughput. Gradients are
analytic; the test suite checks them against central finite differences.

A network is described by a :class:`NetworkSpec` and realised as a
:class:`DenseNetwork` holding parameters plus optimiser state. The module
functions (`forward`, `loss`, `backward`, `adam_step`, `train_epoch`)
operate on those values directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, NumericError, ShapeError

LRELU = "lrelu"
SOFTMAX = "softmax"
SIGMOID = "sigmoid"
EMBEDDING = "embedding"

BINARY = "binary"
CATEGORICAL = "categorical"

# Cross-entropy inputs are clamped away from {0, 1} by this margin.
LOSS_EPS = 1e-7

# Sigmoid outputs are kept strictly inside (0, 1) even at saturating inputs.
SIGMOID_EPS = 1e-15


@dataclass
class NetworkSpec:
    """Architecture and training hyper-parameters for a dense network.

    `output` selects the head: "softmax" over `classes` outputs,
    "sigmoid" with a single output unit, or "embedding" which stops at the
    last hidden layer (used as the shared encoder of a siamese pair).
    """

    input_dim: int
    hidden: tuple[int, ...] = (32, 32)
    output: str = SOFTMAX
    classes: int | None = None
    slope: float = 0.01
    learning_rate: float = 0.01
    seed: int = 0

    def validate(self) -> None:
        if self.input_dim < 1:
            raise ConfigurationError(f"input_dim must be positive, got {self.input_dim}")
        if len(self.hidden) == 0 or any(int(h) < 1 for h in self.hidden):
            raise ConfigurationError(f"hidden layer widths must be positive, got {self.hidden!r}")
        if self.output not in (SOFTMAX, SIGMOID, EMBEDDING):
            raise ConfigurationError(f"unknown output kind {self.output!r}")
        if self.output == SOFTMAX and (self.classes is None or self.classes < 2):
            raise ConfigurationError("softmax output needs classes >= 2")
        if not 0.0 < self.slope < 1.0:
            raise ConfigurationError(f"leaky slope must lie in (0, 1), got {self.slope}")
        if self.learning_rate <= 0.0:
            raise ConfigurationError(f"learning_rate must be positive, got {self.learning_rate}")


@dataclass
class DenseNetwork:
    """Parameters and Adam state for a stack of dense layers.

    `activations[i]` names the nonlinearity applied after layer `i`; hidden
    layers use leaky ReLU and the final layer uses the spec's output kind
    (embedding networks are all-hidden). Adam moments sit alongside the
    parameters so a network can be trained incrementally forever.
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activations: list[str]
    slope: float
    learning_rate: float
    m_w: list[np.ndarray] = field(repr=False, default_factory=list)
    v_w: list[np.ndarray] = field(repr=False, default_factory=list)
    m_b: list[np.ndarray] = field(repr=False, default_factory=list)
    v_b: list[np.ndarray] = field(repr=False, default_factory=list)
    step_count: int = 0

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def output_dim(self) -> int:
        return self.weights[-1].shape[1]


@dataclass
class ForwardPass:
    """Cached intermediates of one forward sweep, consumed by backprop."""

    inputs: np.ndarray
    pre: list[np.ndarray]
    post: list[np.ndarray]

    @property
    def output(self) -> np.ndarray:
        return self.post[-1]


# A gradient is a list of (dW, db) pairs congruent with the network layers.
Gradient = list[tuple[np.ndarray, np.ndarray]]


def seed_sequence(seed) -> np.random.SeedSequence:
    """Wrap an int (or None) in a SeedSequence; pass an existing one through."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def build_network(dims: list[int], activations: list[str], slope: float,
                  learning_rate: float, seed: int) -> DenseNetwork:
    """Construct a network with He-normal weights and zero biases."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        std = np.sqrt(2.0 / fan_in)
        weights.append(rng.normal(0.0, std, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    net = DenseNetwork(weights, biases, list(activations), slope, learning_rate)
    net.m_w = [np.zeros_like(w) for w in weights]
    net.v_w = [np.zeros_like(w) for w in weights]
    net.m_b = [np.zeros_like(b) for b in biases]
    net.v_b = [np.zeros_like(b) for b in biases]
    return net


def init_network(spec: NetworkSpec) -> DenseNetwork:
    """Build the network described by `spec`."""
    spec.validate()
    dims = [spec.input_dim] + [int(h) for h in spec.hidden]
    activations = [LRELU] * len(spec.hidden)
    if spec.output == SOFTMAX:
        dims.append(int(spec.classes))
        activations.append(SOFTMAX)
    elif spec.output == SIGMOID:
        dims.append(1)
        activations.append(SIGMOID)
    return build_network(dims, activations, spec.slope, spec.learning_rate, spec.seed)


def leaky_relu(z: np.ndarray, slope: float) -> np.ndarray:
    return np.where(z >= 0.0, z, slope * z)


def sigmoid(z: np.ndarray) -> np.ndarray:
    # Split by sign so exp never overflows.
    out = np.empty_like(z, dtype=float)
    pos = z >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return np.clip(out, SIGMOID_EPS, 1.0 - SIGMOID_EPS)


def softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _activate(z: np.ndarray, kind: str, slope: float) -> np.ndarray:
    if kind == LRELU:
        return leaky_relu(z, slope)
    if kind == SIGMOID:
        return sigmoid(z)
    if kind == SOFTMAX:
        return softmax(z)
    raise ConfigurationError(f"unknown activation {kind!r}")


def forward(net: DenseNetwork, batch: np.ndarray) -> ForwardPass:
    """Run `batch` (n rows) through the network, caching all intermediates."""
    x = np.atleast_2d(np.asarray(batch, dtype=float))
    if x.shape[1] != net.input_dim:
        raise ShapeError(f"expected input dim {net.input_dim}, got {x.shape[1]}")
    pre, post = [], []
    a = x
    for w, b, kind in zip(net.weights, net.biases, net.activations):
        z = a @ w + b
        a = _activate(z, kind, net.slope)
        pre.append(z)
        post.append(a)
    return ForwardPass(x, pre, post)


def one_hot(labels: np.ndarray, num_classes: int) -> np.ndarray:
    """Encode 1-based class labels as one-hot rows."""
    labels = np.asarray(labels, dtype=int)
    if labels.min() < 1 or labels.max() > num_classes:
        raise ValueError(f"labels must lie in 1..{num_classes}")
    out = np.zeros((labels.size, num_classes))
    out[np.arange(labels.size), labels - 1] = 1.0
    return out


def loss(kind: str, predictions: np.ndarray, targets: np.ndarray) -> float:
    """Mean cross-entropy of a batch, with predictions clamped away from 0/1."""
    p = np.atleast_2d(np.asarray(predictions, dtype=float))
    y = np.atleast_2d(np.asarray(targets, dtype=float))
    if p.shape != y.shape:
        raise ShapeError(f"predictions {p.shape} and targets {y.shape} differ")
    p = np.clip(p, LOSS_EPS, 1.0 - LOSS_EPS)
    if kind == BINARY:
        return float(np.mean(-(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))))
    if kind == CATEGORICAL:
        return float(np.mean(-np.sum(y * np.log(p), axis=1)))
    raise ConfigurationError(f"unknown loss kind {kind!r}")


def loss_delta(predictions: np.ndarray, targets: np.ndarray, kind: str) -> np.ndarray:
    """Derivative of the mean loss w.r.t. the output pre-activation.

    Valid for the matched pairs softmax + categorical CE and sigmoid +
    binary CE, where the derivative collapses to (p - y) / n.
    """
    if kind not in (BINARY, CATEGORICAL):
        raise ConfigurationError(f"unknown loss kind {kind!r}")
    p = np.atleast_2d(np.asarray(predictions, dtype=float))
    y = np.atleast_2d(np.asarray(targets, dtype=float))
    if p.shape != y.shape:
        raise ShapeError(f"predictions {p.shape} and targets {y.shape} differ")
    return (p - y) / p.shape[0]


def backprop(net: DenseNetwork, fp: ForwardPass, delta: np.ndarray) -> tuple[Gradient, np.ndarray]:
    """Propagate `delta` (dLoss/dZ of the last layer) back to all parameters.

    Returns the parameter gradient and the gradient w.r.t. the network
    input, which composite models feed into an upstream network.
    """
    grads: Gradient = [None] * len(net.weights)  # type: ignore[list-item]
    dz = delta
    for i in range(len(net.weights) - 1, -1, -1):
        below = fp.post[i - 1] if i > 0 else fp.inputs
        grads[i] = (below.T @ dz, dz.sum(axis=0))
        da = dz @ net.weights[i].T
        if i > 0:
            dz = da * np.where(fp.pre[i - 1] >= 0.0, 1.0, net.slope)
    return grads, da


def output_delta(net: DenseNetwork, fp: ForwardPass, d_output: np.ndarray) -> np.ndarray:
    """Convert a gradient w.r.t. an embedding network's output into dZ."""
    if net.activations[-1] != LRELU:
        raise ConfigurationError("output_delta applies to embedding networks only")
    return d_output * np.where(fp.pre[-1] >= 0.0, 1.0, net.slope)


def backward(net: DenseNetwork, fp: ForwardPass, targets: np.ndarray, kind: str) -> Gradient:
    """Exact gradient of the mean loss for a classifier network."""
    grads, _ = backprop(net, fp, loss_delta(fp.output, targets, kind))
    return grads


def adam_step(net: DenseNetwork, grads: Gradient) -> DenseNetwork:
    """Apply one bias-corrected Adam update in place.

    Non-finite gradients abort before any parameter is touched.
    """
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    if len(grads) != len(net.weights):
        raise ShapeError(f"expected {len(net.weights)} layer gradients, got {len(grads)}")
    for (dw, db), w, b in zip(grads, net.weights, net.biases):
        if dw.shape != w.shape or db.shape != b.shape:
            raise ShapeError(f"gradient shape {dw.shape}/{db.shape} does not match {w.shape}/{b.shape}")
        if not (np.isfinite(dw).all() and np.isfinite(db).all()):
            raise NumericError("non-finite gradient, update aborted")
    net.step_count += 1
    t = net.step_count
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t
    for i, (dw, db) in enumerate(grads):
        for p, g, m, v in ((net.weights[i], dw, net.m_w[i], net.v_w[i]),
                           (net.biases[i], db, net.m_b[i], net.v_b[i])):
            m *= beta1
            m += (1.0 - beta1) * g
            v *= beta2
            v += (1.0 - beta2) * g * g
            p -= net.learning_rate * (m / c1) / (np.sqrt(v / c2) + eps)
    return net


def minibatch_slices(n: int, batch_size: int) -> list[slice]:
    """Split `n` items into consecutive slices; the last one may be smaller."""
    if batch_size < 1:
        raise ConfigurationError(f"batch_size must be positive, got {batch_size}")
    return [slice(s, min(s + batch_size, n)) for s in range(0, n, batch_size)]


def train_epoch(net: DenseNetwork, inputs: np.ndarray, targets: np.ndarray, kind: str,
                batch_size: int, seed) -> float:
    """One epoch of shuffled mini-batch training; returns the mean cost.

    The cost of each mini-batch is recorded before its update, so the
    return value is the example-weighted mean pre-update cost.
    """
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.atleast_2d(np.asarray(targets, dtype=float))
    n = x.shape[0]
    if n == 0:
        raise ValueError("empty training set")
    if y.shape[0] != n:
        raise ShapeError(f"{n} inputs but {y.shape[0]} target rows")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    total = 0.0
    for sl in minibatch_slices(n, batch_size):
        idx = order[sl]
        fp = forward(net, x[idx])
        total += loss(kind, fp.output, y[idx]) * idx.size
        adam_step(net, backward(net, fp, y[idx], kind))
    return total / n


def save_params(net: DenseNetwork, path) -> None:
    """Dump parameters and optimiser state to an .npz file (debug aid)."""
    arrays = {"format_version": np.array([1]), "step_count": np.array([net.step_count])}
    for i in range(len(net.weights)):
        arrays[f"w{i}"] = net.weights[i]
        arrays[f"b{i}"] = net.biases[i]
        arrays[f"mw{i}"] = net.m_w[i]
        arrays[f"vw{i}"] = net.v_w[i]
        arrays[f"mb{i}"] = net.m_b[i]
        arrays[f"vb{i}"] = net.v_b[i]
    np.savez(path, **arrays)


def load_params(net: DenseNetwork, path) -> DenseNetwork:
    """Restore parameters saved by :func:`save_params` into `net`."""
    data = np.load(path)
    if int(data["format_version"][0]) != 1:
        raise ConfigurationError("unknown parameter dump version")
    net.step_count = int(data["step_count"][0])
    for i in range(len(net.weights)):
        if data[f"w{i}"].shape != net.weights[i].shape:
            raise ShapeError(f"layer {i} shape mismatch in parameter dump")
        net.weights[i][:] = data[f"w{i}"]
        net.biases[i][:] = data[f"b{i}"]
        net.m_w[i][:] = data[f"mw{i}"]
        net.v_w[i][:] = data[f"vw{i}"]
        net.m_b[i][:] = data[f"mb{i}"]
        net.v_b[i][:] = data[f"vb{i}"]
    return net
