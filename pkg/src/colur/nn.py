"""Minimal deterministic MLP: forward, soft-target cross-entropy, backprop,
SGD descent and gradient-ascent updates, checkpoint serialization."""

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ShapeError

CHECKPOINT_MAGIC = b"COLUR1"
LOG_CLAMP = 1e-12


@dataclass
class MlpParams:
    """Dense MLP parameters: per layer a (out, in) weight matrix and (out,) bias.

    Hidden activations are ReLU, the output layer is a softmax over K classes.
    """

    weights: list
    biases: list

    @property
    def layer_sizes(self):
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    @property
    def num_classes(self):
        return self.weights[-1].shape[0]

    def copy(self):
        return MlpParams([w.copy() for w in self.weights],
                         [b.copy() for b in self.biases])

    def allclose_bytes(self, other):
        """True when both parameter sets are bit-identical."""
        return (len(self.weights) == len(other.weights)
                and all(a.tobytes() == b.tobytes()
                        for a, b in zip(self.weights, other.weights))
                and all(a.tobytes() == b.tobytes()
                        for a, b in zip(self.biases, other.biases)))


@dataclass
class OptimState:
    """SGD hyperparameters plus per-parameter momentum buffers."""

    lr: float
    momentum: float = 0.9
    weight_decay: float = 1e-3
    buffers: list = field(default=None)

    def __post_init__(self):
        if self.lr < 0:
            raise ConfigError("learning rate must be nonnegative")
        if not (0 <= self.momentum < 1):
            raise ConfigError("momentum must be in [0, 1)")
        if self.weight_decay < 0:
            raise ConfigError("weight decay must be nonnegative")

    def _ensure_buffers(self, params):
        if self.buffers is None:
            self.buffers = ([np.zeros_like(w) for w in params.weights]
                            + [np.zeros_like(b) for b in params.biases])


def init_params(layer_sizes, seed):
    """Seeded init: weights uniform in +-1/sqrt(fan_in), biases zero."""
    if len(layer_sizes) < 2:
        raise ConfigError("layer_sizes needs at least input and output extents")
    if any(int(s) <= 0 for s in layer_sizes):
        raise ConfigError(f"layer_sizes must be positive, got {layer_sizes}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        scale = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-scale, scale, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpParams(weights, biases)


def _forward_trace(params, batch):
    """Forward pass keeping pre/post activations for backprop."""
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[1] != params.weights[0].shape[1]:
        raise ShapeError(
            f"batch shape {batch.shape} incompatible with input extent "
            f"{params.weights[0].shape[1]}")
    acts = [batch]
    h = batch
    n_layers = len(params.weights)
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = h @ w.T + b
        if i < n_layers - 1:
            h = np.maximum(z, 0.0)
        else:
            # stable softmax
            z = z - z.max(axis=1, keepdims=True)
            e = np.exp(z)
            h = e / e.sum(axis=1, keepdims=True)
        acts.append(h)
    return acts


def forward(params, batch):
    """Batch of inputs -> (B, K) softmax probabilities."""
    return _forward_trace(params, batch)[-1]


def soft_ce_loss(probs, targets):
    """Mean over the batch of -sum_k t_k log p_k, probs clamped at 1e-12."""
    probs = np.asarray(probs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if probs.shape != targets.shape:
        raise ShapeError(f"probs {probs.shape} vs targets {targets.shape}")
    logp = np.log(np.maximum(probs, LOG_CLAMP))
    return float(-(targets * logp).sum(axis=-1).mean())


def backward(params, batch, targets):
    """Loss and exact analytic gradients of soft_ce_loss(forward(batch))."""
    targets = np.asarray(targets, dtype=np.float64)
    acts = _forward_trace(params, batch)
    probs = acts[-1]
    if targets.shape != probs.shape:
        raise ShapeError(f"targets {targets.shape} vs probs {probs.shape}")
    loss = soft_ce_loss(probs, targets)
    batch_size = probs.shape[0]
    # softmax + CE: dL/dlogits = (p - t) / B
    delta = (probs - targets) / batch_size
    grads_w = [None] * len(params.weights)
    grads_b = [None] * len(params.biases)
    for i in range(len(params.weights) - 1, -1, -1):
        grads_w[i] = delta.T @ acts[i]
        grads_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ params.weights[i]) * (acts[i] > 0)
    return loss, GradBundle(grads_w, grads_b)


@dataclass
class GradBundle:
    weights: list
    biases: list


def _check_finite(params):
    for arr in params.weights + params.biases:
        if not np.all(np.isfinite(arr)):
            raise FloatingPointError("non-finite parameter values after update")


def descend(params, grads, opt):
    """theta <- theta - lr * (momentum-adjusted grad + weight_decay * theta)."""
    opt._ensure_buffers(params)
    n = len(params.weights)
    new_w, new_b = [], []
    for i, (w, g) in enumerate(zip(params.weights, grads.weights)):
        buf = opt.buffers[i]
        buf *= opt.momentum
        buf += g
        new_w.append(w - opt.lr * (buf + opt.weight_decay * w))
    for i, (b, g) in enumerate(zip(params.biases, grads.biases)):
        buf = opt.buffers[n + i]
        buf *= opt.momentum
        buf += g
        new_b.append(b - opt.lr * (buf + opt.weight_decay * b))
    out = MlpParams(new_w, new_b)
    _check_finite(out)
    return out


def ascend(params, grads, opt):
    """Pure gradient ascent: theta <- theta + lr * grad (no momentum/decay)."""
    new_w = [w + opt.lr * g for w, g in zip(params.weights, grads.weights)]
    new_b = [b + opt.lr * g for b, g in zip(params.biases, grads.biases)]
    out = MlpParams(new_w, new_b)
    _check_finite(out)
    return out


def save_checkpoint(params, path):
    """Binary format: magic, layer count, layer sizes (int64 LE), then per
    layer the weight matrix followed by the bias vector as float64 LE."""
    sizes = params.layer_sizes
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<q", len(params.weights)))
        for s in sizes:
            fh.write(struct.pack("<q", s))
        for w, b in zip(params.weights, params.biases):
            fh.write(w.astype("<f8").tobytes())
            fh.write(b.astype("<f8").tobytes())


def load_checkpoint(path):
    with open(path, "rb") as fh:
        magic = fh.read(len(CHECKPOINT_MAGIC))
        if magic != CHECKPOINT_MAGIC:
            raise IOError(f"{path}: not a COLUR checkpoint (bad magic {magic!r})")
        (n_layers,) = struct.unpack("<q", fh.read(8))
        sizes = [struct.unpack("<q", fh.read(8))[0] for _ in range(n_layers + 1)]
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            w = np.frombuffer(fh.read(8 * fan_out * fan_in), dtype="<f8")
            weights.append(w.reshape(fan_out, fan_in).copy())
            b = np.frombuffer(fh.read(8 * fan_out), dtype="<f8")
            biases.append(b.copy())
    return MlpParams(weights, biases)
