"""Minimal feed-forward network engine: ReLU MLPs, exact backprop, Adam.

Everything is double precision and plain numpy.  Networks are plain values
(lists of arrays); nothing here keeps hidden global state, so identical
weights and inputs always reproduce identical outputs bitwise.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import BinaryIO

import numpy as np

from .errors import ConfigurationError, NumericalError

Array = np.ndarray

CHECKPOINT_MAGIC = b"CRNN"
CHECKPOINT_VERSION = 1


@dataclass
class Mlp:
    """Fully connected net; ReLU on hidden layers, identity on the output.

    ``weights[i]`` has shape ``(layer_sizes[i], layer_sizes[i+1])`` and
    ``biases[i]`` has shape ``(layer_sizes[i+1],)``.
    """

    layer_sizes: list[int]
    weights: list[Array]
    biases: list[Array]

    def __post_init__(self) -> None:
        if len(self.layer_sizes) < 2:
            raise ConfigurationError("an Mlp needs at least an input and an output layer")
        if any(n <= 0 for n in self.layer_sizes):
            raise ConfigurationError(f"layer sizes must be positive: {self.layer_sizes}")
        expected = list(zip(self.layer_sizes[:-1], self.layer_sizes[1:]))
        for i, ((n_in, n_out), w, b) in enumerate(zip(expected, self.weights, self.biases)):
            if w.shape != (n_in, n_out) or b.shape != (n_out,):
                raise ConfigurationError(
                    f"layer {i}: expected W{(n_in, n_out)} b{(n_out,)}, got W{w.shape} b{b.shape}"
                )
        if len(self.weights) != len(expected) or len(self.biases) != len(expected):
            raise ConfigurationError("weight/bias count does not match layer_sizes")

    @property
    def in_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def out_dim(self) -> int:
        return self.layer_sizes[-1]

    def params(self) -> list[Array]:
        """Flat parameter list, weights and biases interleaved per layer."""
        out: list[Array] = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def copy(self) -> "Mlp":
        return Mlp(
            list(self.layer_sizes),
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
        )


def init_mlp(layer_sizes: list[int], rng: np.random.Generator) -> Mlp:
    """He-uniform initialization scaled by fan-in; biases start at zero."""
    weights, biases = [], []
    for n_in, n_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        limit = math.sqrt(6.0 / n_in)
        weights.append(rng.uniform(-limit, limit, size=(n_in, n_out)))
        biases.append(np.zeros(n_out))
    return Mlp(list(layer_sizes), weights, biases)


@dataclass
class ForwardTrace:
    """Activations recorded during a forward pass, consumed by backward."""

    inputs: Array               # (B, in_dim)
    pre_activations: list[Array]
    activations: list[Array]    # post-ReLU hidden activations
    outputs: Array              # (B, out_dim)


def forward_batch(net: Mlp, x: Array, trace: bool = False) -> Array | ForwardTrace:
    """Forward pass over a batch (B, in_dim) -> (B, out_dim)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != net.in_dim:
        raise ConfigurationError(f"input shape {x.shape} does not match in_dim {net.in_dim}")
    pre: list[Array] = []
    act: list[Array] = []
    h = x
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = h @ w + b
        if i < last:
            pre.append(z)
            h = np.maximum(z, 0.0)
            act.append(h)
        else:
            h = z
    if trace:
        return ForwardTrace(inputs=x, pre_activations=pre, activations=act, outputs=h)
    return h


def forward(net: Mlp, x: Array) -> Array:
    """Single-vector forward pass."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (net.in_dim,):
        raise ConfigurationError(f"input shape {x.shape} does not match in_dim {net.in_dim}")
    return forward_batch(net, x[None, :])[0]


@dataclass
class Gradients:
    """Parameter gradients plus the gradient w.r.t. the net input."""

    weights: list[Array]
    biases: list[Array]
    inputs: Array

    def params(self) -> list[Array]:
        out: list[Array] = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out


def backward_batch(net: Mlp, trace: ForwardTrace, output_grad: Array) -> Gradients:
    """Exact gradients of sum_b output_b . output_grad_b w.r.t. parameters.

    Parameter gradients are summed over the batch; input gradients are
    returned per sample.
    """
    g = np.asarray(output_grad, dtype=np.float64)
    if g.shape != trace.outputs.shape:
        raise ConfigurationError(
            f"output_grad shape {g.shape} does not match outputs {trace.outputs.shape}"
        )
    n_layers = len(net.weights)
    d_weights: list[Array] = [np.empty(0)] * n_layers
    d_biases: list[Array] = [np.empty(0)] * n_layers
    dz = g
    for i in range(n_layers - 1, -1, -1):
        a_prev = trace.inputs if i == 0 else trace.activations[i - 1]
        d_weights[i] = a_prev.T @ dz
        d_biases[i] = dz.sum(axis=0)
        if i > 0:
            da = dz @ net.weights[i].T
            dz = da * (trace.pre_activations[i - 1] > 0.0)
        else:
            dz = dz @ net.weights[i].T
    return Gradients(weights=d_weights, biases=d_biases, inputs=dz)


def backward(net: Mlp, x: Array, output_grad: Array) -> Gradients:
    """Single-vector backward: gradients of output . output_grad."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (net.in_dim,):
        raise ConfigurationError(f"input shape {x.shape} does not match in_dim {net.in_dim}")
    g = np.asarray(output_grad, dtype=np.float64)
    if g.shape != (net.out_dim,):
        raise ConfigurationError(f"output_grad shape {g.shape} does not match out_dim {net.out_dim}")
    trace = forward_batch(net, x[None, :], trace=True)
    grads = backward_batch(net, trace, g[None, :])
    grads.inputs = grads.inputs[0]
    return grads


@dataclass
class AdamState:
    """Adam moments for a flat parameter list."""

    first_moment: list[Array]
    second_moment: list[Array]
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def for_params(cls, params: list[Array], beta1: float = 0.9, beta2: float = 0.999,
                   epsilon: float = 1e-8) -> "AdamState":
        return cls(
            first_moment=[np.zeros_like(p) for p in params],
            second_moment=[np.zeros_like(p) for p in params],
            beta1=beta1,
            beta2=beta2,
            epsilon=epsilon,
        )


def adam_step(params: list[Array], grads: list[Array], state: AdamState, lr: float
              ) -> tuple[list[Array], AdamState]:
    """One bias-corrected Adam update, in place on ``params`` and ``state``."""
    if lr < 0:
        raise ConfigurationError(f"learning rate must be >= 0, got {lr}")
    if len(params) != len(grads) or len(params) != len(state.first_moment):
        raise ConfigurationError("params/grads/state length mismatch")
    for i, (p, g) in enumerate(zip(params, grads)):
        if p.shape != g.shape:
            raise ConfigurationError(f"param {i}: grad shape {g.shape} != param shape {p.shape}")
        if not np.all(np.isfinite(g)):
            raise NumericalError(f"non-finite gradient in parameter {i}; update rejected")
    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1**t
    bc2 = 1.0 - b2**t
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * np.square(g)
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.epsilon)
    return params, state


def linear_lr(lr0: float, p: float) -> float:
    """Linearly decayed learning rate over training progress, floored at 0."""
    return lr0 * max(0.0, 1.0 - p)


def global_norm_clip(grads: list[Array], max_norm: float) -> float:
    """Scale grads in place so their global L2 norm is <= max_norm. Returns the pre-clip norm."""
    total = math.sqrt(sum(float(np.sum(np.square(g))) for g in grads))
    if max_norm > 0 and total > max_norm:
        scale = max_norm / total
        for g in grads:
            g *= scale
    return total


# ---------------------------------------------------------------------------
# Checkpoint serialization: versioned flat binary, little-endian float64,
# bit-exact round trip.
# ---------------------------------------------------------------------------

def write_mlp(f: BinaryIO, net: Mlp) -> None:
    f.write(CHECKPOINT_MAGIC)
    f.write(struct.pack("<I", CHECKPOINT_VERSION))
    f.write(struct.pack("<I", len(net.layer_sizes)))
    for n in net.layer_sizes:
        f.write(struct.pack("<I", n))
    for w, b in zip(net.weights, net.biases):
        f.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def read_mlp(f: BinaryIO) -> Mlp:
    magic = f.read(4)
    if magic != CHECKPOINT_MAGIC:
        raise ConfigurationError(f"bad checkpoint magic {magic!r}")
    (version,) = struct.unpack("<I", f.read(4))
    if version != CHECKPOINT_VERSION:
        raise ConfigurationError(f"unsupported checkpoint version {version}")
    (n_sizes,) = struct.unpack("<I", f.read(4))
    sizes = [struct.unpack("<I", f.read(4))[0] for _ in range(n_sizes)]
    weights, biases = [], []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        w = np.frombuffer(f.read(8 * n_in * n_out), dtype="<f8").reshape(n_in, n_out).copy()
        b = np.frombuffer(f.read(8 * n_out), dtype="<f8").copy()
        weights.append(w)
        biases.append(b)
    return Mlp(sizes, weights, biases)


def save_mlp(path, net: Mlp) -> None:
    with open(path, "wb") as f:
        write_mlp(f, net)


def load_mlp(path) -> Mlp:
    with open(path, "rb") as f:
        return read_mlp(f)


def write_array(f: BinaryIO, arr: Array) -> None:
    a = np.ascontiguousarray(arr, dtype="<f8")
    f.write(struct.pack("<I", a.ndim))
    for d in a.shape:
        f.write(struct.pack("<I", d))
    f.write(a.tobytes())


def read_array(f: BinaryIO) -> Array:
    (ndim,) = struct.unpack("<I", f.read(4))
    shape = tuple(struct.unpack("<I", f.read(4))[0] for _ in range(ndim))
    count = int(np.prod(shape)) if shape else 1
    return np.frombuffer(f.read(8 * count), dtype="<f8").reshape(shape).copy()
