"""Multilayer perceptron trained online with the generalized delta rule.

Framework-free on purpose: plain numpy arrays, sigmoid units on hidden
and output layers, and a self-contained xorshift64* PRNG so that
initialization and shuffling reproduce bit-for-bit anywhere the same
recurrence is implemented.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionMismatch

_MASK64 = 0xFFFFFFFFFFFFFFFF
_STAR = 2685821657736338717  # 0x2545F4914F6CDD1D
_TWO53 = 9007199254740992.0


class Rng:
    """xorshift64* stream.

    State update is x ^= x>>12; x ^= x<<25; x ^= x>>27 (64-bit), output
    is the 64-bit product state * 0x2545F4914F6CDD1D; the top 53 bits of
    the product give a uniform float in [0, 1).
    """

    __slots__ = ("state",)

    def __init__(self, seed: int):
        state = seed & _MASK64
        if state == 0:
            raise ConfigError("rng seed must be nonzero")
        self.state = state

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & _MASK64
        x ^= x >> 27
        self.state = x
        return (x * _STAR) & _MASK64

    def next_float(self) -> float:
        """Uniform in [0, 1)."""
        return (self.next_u64() >> 11) / _TWO53

    def next_unit(self) -> float:
        """Uniform in [-1, 1)."""
        return 2.0 * self.next_float() - 1.0

    def next_index(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        return int(self.next_float() * n)

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates driven by this stream."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_index(i + 1)
            items[i], items[j] = items[j], items[i]


@dataclass
class Mlp:
    """Layered sigmoid network.

    weights[l] has shape (layer_sizes[l+1], layer_sizes[l]); biases[l]
    belongs to layer l+1.  The input layer has neither.
    """

    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_outputs(self) -> int:
        return self.layer_sizes[-1]

    def copy(self) -> "Mlp":
        return Mlp(
            self.layer_sizes,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
        )


@dataclass
class Activations:
    """Forward-pass record: outputs per layer (input included), pre-activations per non-input layer."""

    outputs: list[np.ndarray]
    preacts: list[np.ndarray]


def sigmoid(s):
    """Logistic 1/(1+e^-s), numerically stable for large |s|."""
    arr = np.atleast_1d(np.asarray(s, dtype=np.float64))
    out = np.empty_like(arr)
    pos = arr >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-arr[pos]))
    exp_s = np.exp(arr[~pos])
    out[~pos] = exp_s / (1.0 + exp_s)
    if np.ndim(s) == 0:
        return float(out[0])
    return out


def init_network_from_rng(layer_sizes, rng: Rng) -> Mlp:
    """Fill parameters from an existing stream; see init_network for the order."""
    sizes = tuple(int(n) for n in layer_sizes)
    if len(sizes) < 2 or any(n < 1 for n in sizes):
        raise ConfigError(f"need at least two layers of positive size, got {sizes}")
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        w = np.array([rng.next_unit() for _ in range(fan_out * fan_in)])
        weights.append(w.reshape(fan_out, fan_in))
        biases.append(np.array([rng.next_unit() for _ in range(fan_out)]))
    return Mlp(sizes, weights, biases)


def init_network(layer_sizes, seed: int) -> Mlp:
    """Seeded network with all parameters uniform in [-1, 1).

    Draw order is fixed: layer pair by layer pair, the weight matrix
    row-major first, then that layer's biases.  Identical seeds give
    bit-identical networks.
    """
    return init_network_from_rng(layer_sizes, Rng(seed))


def forward(net: Mlp, pattern) -> Activations:
    """Propagate one pattern; returns every layer's outputs and pre-activations."""
    y = np.asarray(pattern, dtype=np.float64)
    if y.shape != (net.n_inputs,):
        raise DimensionMismatch(f"input shape {y.shape} != ({net.n_inputs},)")
    outputs = [y]
    preacts = []
    for w, b in zip(net.weights, net.biases):
        s = w @ outputs[-1] + b
        preacts.append(s)
        outputs.append(sigmoid(s))
    return Activations(outputs, preacts)


def output_deltas(target, actual) -> np.ndarray:
    """Error signal at the output layer: (d - y) * y * (1 - y)."""
    d = np.asarray(target, dtype=np.float64)
    y = np.asarray(actual, dtype=np.float64)
    if d.shape != y.shape:
        raise DimensionMismatch(f"target shape {d.shape} != output shape {y.shape}")
    return (d - y) * y * (1.0 - y)


def hidden_deltas(net: Mlp, layer_index: int, acts: Activations, next_deltas) -> np.ndarray:
    """Error signal for hidden layer ``layer_index``, folded back from the next layer.

    delta_h = y_h * (1 - y_h) * sum_o next_deltas[o] * w[o][h].
    """
    if not 1 <= layer_index <= len(net.layer_sizes) - 2:
        raise IndexError(f"layer {layer_index} is not a hidden layer")
    nd = np.asarray(next_deltas, dtype=np.float64)
    w_out = net.weights[layer_index]
    if nd.shape != (w_out.shape[0],):
        raise DimensionMismatch(f"next_deltas shape {nd.shape} != ({w_out.shape[0]},)")
    y = acts.outputs[layer_index]
    return y * (1.0 - y) * (w_out.T @ nd)


def train_pattern(net: Mlp, pattern, target, learning_rate: float) -> tuple[Mlp, float]:
    """One online update: forward pass, deltas, then w += lr*delta*y and b += lr*delta.

    All deltas are computed against the pre-update weights; the returned
    SSE sum((d - y)^2) also comes from the pre-update forward pass.  The
    network is updated in place and returned.
    """
    if learning_rate <= 0:
        raise ConfigError("learning_rate must be positive")
    d = np.asarray(target, dtype=np.float64)
    acts = forward(net, pattern)
    y_out = acts.outputs[-1]
    if d.shape != y_out.shape:
        raise DimensionMismatch(f"target shape {d.shape} != output shape {y_out.shape}")
    sse = float(np.sum((d - y_out) ** 2))

    deltas = [output_deltas(d, y_out)]
    for layer in range(len(net.layer_sizes) - 2, 0, -1):
        deltas.append(hidden_deltas(net, layer, acts, deltas[-1]))
    deltas.reverse()  # deltas[l] now belongs to layer l+1

    for l, delta in enumerate(deltas):
        net.weights[l] += learning_rate * np.outer(delta, acts.outputs[l])
        net.biases[l] += learning_rate * delta
    return net, sse
