"""Minimal fully connected network with tanh hidden layers and exact
analytic gradients, trained by plain mini-batch SGD with an exponentially
decaying learning rate.

No autodiff framework: forward caches activations, backward applies the
chain rule by hand, and the finite-difference test suite certifies the
gradients.  Weights are float64 throughout.
"""

import struct
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

SNAPSHOT_MAGIC = b"RMNET1\n"  # format version header for parameter snapshots


@dataclass
class Mlp:
    """Affine->tanh hidden layers, affine (identity) output layer.

    weights[i] has shape (fan_in, fan_out); biases[i] shape (fan_out,).
    """

    layer_sizes: Tuple[int, ...]
    weights: List[np.ndarray]
    biases: List[np.ndarray]

    def copy(self) -> "Mlp":
        return Mlp(self.layer_sizes,
                   [w.copy() for w in self.weights],
                   [b.copy() for b in self.biases])

    @property
    def num_parameters(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))


@dataclass
class Gradients:
    d_weights: List[np.ndarray]
    d_biases: List[np.ndarray]


@dataclass
class SgdSchedule:
    """lr(e) = initial_lr * decay_rate^(e / decay_steps)."""

    initial_lr: float = 3e-4
    decay_rate: float = 0.99
    decay_steps: float = 1e4
    batch_size: int = 2048

    def lr(self, episode: int) -> float:
        return self.initial_lr * self.decay_rate ** (episode / self.decay_steps)


def init_mlp(layer_sizes: Sequence[int], rng_seed: int = 0) -> Mlp:
    """Seeded scaled-uniform init: W ~ U(+-sqrt(6/(fan_in+fan_out))), b = 0."""
    sizes = tuple(int(s) for s in layer_sizes)
    if len(sizes) < 2:
        raise ValueError("need at least an input and an output layer")
    rng = np.random.default_rng(rng_seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return Mlp(layer_sizes=sizes, weights=weights, biases=biases)


def forward(net: Mlp, x: np.ndarray):
    """Run the network; returns (output, cache) with cache feeding backward.

    Accepts a single input vector or a (batch, features) matrix; the output
    matches the input's rank.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    a = x[None, :] if single else x
    if a.shape[1] != net.layer_sizes[0]:
        raise ValueError(f"input has {a.shape[1]} features, expected {net.layer_sizes[0]}")
    activations = [a]  # post-activation inputs to each layer
    n_layers = len(net.weights)
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = a @ w + b
        a = np.tanh(z) if i < n_layers - 1 else z
        activations.append(a)
    out = activations[-1]
    return (out[0] if single else out), activations


def backward(net: Mlp, cache: List[np.ndarray], output_grad: np.ndarray) -> Gradients:
    """Exact gradients of the scalar loss whose d(loss)/d(output) is given.

    ``output_grad`` must match the shape of the forward output (any batch
    scaling, e.g. 1/B for a mean loss, belongs in output_grad itself).
    """
    g = np.asarray(output_grad, dtype=float)
    if g.ndim == 1:
        g = g[None, :]
    if g.shape != cache[-1].shape:
        raise ValueError("output_grad shape does not match forward output")
    d_weights = [None] * len(net.weights)
    d_biases = [None] * len(net.biases)
    for i in range(len(net.weights) - 1, -1, -1):
        a_prev = cache[i]
        d_weights[i] = a_prev.T @ g
        d_biases[i] = g.sum(axis=0)
        if i > 0:
            g = g @ net.weights[i].T
            g = g * (1.0 - cache[i] ** 2)  # tanh'(z) = 1 - tanh(z)^2
    return Gradients(d_weights=d_weights, d_biases=d_biases)


def sgd_step(net: Mlp, grads: Gradients, lr: float, direction: str = "descend") -> Mlp:
    """In-place parameter update theta <- theta -+ lr * grad; returns net."""
    if direction == "ascend":
        sign = 1.0
    elif direction == "descend":
        sign = -1.0
    else:
        raise ValueError("direction must be 'ascend' or 'descend'")
    for w, b, dw, db in zip(net.weights, net.biases, grads.d_weights, grads.d_biases):
        w += sign * lr * dw
        b += sign * lr * db
    return net


def save_mlp(net: Mlp, path) -> None:
    """Snapshot format: magic header, uint32 layer count, uint32 layer sizes,
    then per layer the row-major float64 weights followed by the biases."""
    with open(path, "wb") as f:
        f.write(SNAPSHOT_MAGIC)
        f.write(struct.pack("<I", len(net.layer_sizes)))
        f.write(struct.pack(f"<{len(net.layer_sizes)}I", *net.layer_sizes))
        for w, b in zip(net.weights, net.biases):
            f.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            f.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_mlp(path) -> Mlp:
    with open(path, "rb") as f:
        magic = f.read(len(SNAPSHOT_MAGIC))
        if magic != SNAPSHOT_MAGIC:
            raise ValueError("not a network snapshot (bad header)")
        (n_layers,) = struct.unpack("<I", f.read(4))
        sizes = struct.unpack(f"<{n_layers}I", f.read(4 * n_layers))
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            w = np.frombuffer(f.read(8 * fan_in * fan_out), dtype="<f8").reshape(fan_in, fan_out)
            b = np.frombuffer(f.read(8 * fan_out), dtype="<f8")
            weights.append(w.copy())
            biases.append(b.copy())
    return Mlp(layer_sizes=tuple(sizes), weights=weights, biases=biases)
