"""Scalar potential network: fully-connected ReLU layers with hand-rolled
reverse-mode gradients, plus an Adam optimizer. Everything runs in float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

NO_REG = "none"
TRAJECTORY_REG = "trajectory"

_CHECKPOINT_MAGIC = "arrowtime-mlp"
_CHECKPOINT_VERSION = 1


@dataclass
class MlpModel:
    """Weights/biases per layer; ReLU on hidden layers, identity scalar output."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def dims(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    def num_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def copy(self) -> "MlpModel":
        return MlpModel([w.copy() for w in self.weights], [b.copy() for b in self.biases])


def init_mlp(input_dim: int, hidden: list[int], seed) -> MlpModel:
    """He-uniform weights in +-sqrt(6/fan_in), zero biases; output width 1."""
    if input_dim <= 0 or any(w <= 0 for w in hidden):
        raise ValueError("layer widths must be positive")
    rng = np.random.default_rng(seed)
    dims = [input_dim] + list(hidden) + [1]
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(weights, biases)


def _as_batch(x: np.ndarray, input_dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != input_dim:
        raise ValueError(f"expected states of dimension {input_dim}, got shape {x.shape}")
    return x


def forward(model: MlpModel, x: np.ndarray) -> np.ndarray:
    """Potential values for a batch of states; (B, D) -> (B,), (D,) -> scalar."""
    squeeze = np.asarray(x).ndim == 1
    a = _as_batch(x, model.input_dim)
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        a = a @ w + b
        if i < last:
            np.maximum(a, 0.0, out=a)
    out = a[:, 0]
    return float(out[0]) if squeeze else out


def _forward_cached(model: MlpModel, x: np.ndarray):
    """Forward pass keeping post-activation values per layer for backprop."""
    acts = [x]
    a = x
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        a = a @ w + b
        if i < last:
            np.maximum(a, 0.0, out=a)
        acts.append(a)
    return acts


def _backprop(model: MlpModel, acts, d_out: np.ndarray, grads) -> None:
    """Accumulate parameter gradients for d(loss)/d(output) = d_out, shape (B,)."""
    delta = d_out[:, None]
    for i in range(len(model.weights) - 1, -1, -1):
        grads[i][0] += acts[i].T @ delta
        grads[i][1] += delta.sum(axis=0)
        if i > 0:
            delta = (delta @ model.weights[i].T) * (acts[i] > 0.0)


def zero_grads(model: MlpModel):
    return [[np.zeros_like(w), np.zeros_like(b)] for w, b in zip(model.weights, model.biases)]


def loss_and_grad(model: MlpModel, s0: np.ndarray, s1: np.ndarray,
                  lam: float = 0.0, reg: str = NO_REG):
    """Loss and parameter gradients on a batch of consecutive-state pairs.

    loss = mean over pairs of (-dh + lam * dh^2) with dh = h(s1) - h(s0);
    the lam term applies only for reg="trajectory". Gradients flow through
    both forward passes.
    """
    s0 = _as_batch(s0, model.input_dim)
    s1 = _as_batch(s1, model.input_dim)
    if s0.shape[0] != s1.shape[0]:
        raise ValueError("state batches must have equal length")
    batch = s0.shape[0]
    if batch == 0:
        raise ValueError("batch must be non-empty")
    acts0 = _forward_cached(model, s0)
    acts1 = _forward_cached(model, s1)
    dh = acts1[-1][:, 0] - acts0[-1][:, 0]
    if reg == TRAJECTORY_REG:
        loss = float(np.mean(-dh + lam * dh * dh))
        dloss_ddh = (-1.0 + 2.0 * lam * dh) / batch
    elif reg == NO_REG:
        loss = float(np.mean(-dh))
        dloss_ddh = np.full(batch, -1.0 / batch)
    else:
        raise ValueError(f"unknown regularizer {reg!r}")
    grads = zero_grads(model)
    _backprop(model, acts1, dloss_ddh, grads)
    _backprop(model, acts0, -dloss_ddh, grads)
    return loss, grads


def grad_global_norm(grads) -> float:
    total = 0.0
    for gw, gb in grads:
        total += float(np.dot(gw.ravel(), gw.ravel())) + float(np.dot(gb, gb))
    return np.sqrt(total)


def clip_grads(grads, max_norm: float):
    norm = grad_global_norm(grads)
    if norm > max_norm > 0.0:
        scale = max_norm / norm
        for gw, gb in grads:
            gw *= scale
            gb *= scale
    return grads


@dataclass
class AdamState:
    """First/second-moment accumulators shaped like the parameters."""

    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    @classmethod
    def for_model(cls, model: MlpModel, lr: float = 1e-4, weight_decay: float = 0.0,
                  beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        state = cls(lr=lr, beta1=beta1, beta2=beta2, eps=eps, weight_decay=weight_decay)
        state.m = [(np.zeros_like(w), np.zeros_like(b)) for w, b in zip(model.weights, model.biases)]
        state.v = [(np.zeros_like(w), np.zeros_like(b)) for w, b in zip(model.weights, model.biases)]
        return state


def adam_step(model: MlpModel, state: AdamState, grads) -> None:
    """One Adam update in place; weight decay is coupled (added to the gradient)."""
    state.step += 1
    bc1 = 1.0 - state.beta1 ** state.step
    bc2 = 1.0 - state.beta2 ** state.step
    for i, (gw, gb) in enumerate(grads):
        for j, (param, grad) in enumerate(((model.weights[i], gw), (model.biases[i], gb))):
            if state.weight_decay:
                grad = grad + state.weight_decay * param
            m = state.m[i][j]
            v = state.v[i][j]
            m *= state.beta1
            m += (1.0 - state.beta1) * grad
            v *= state.beta2
            v += (1.0 - state.beta2) * grad * grad
            param -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)


def params_vector(model: MlpModel) -> np.ndarray:
    """All parameters flattened into one vector (for finite-difference checks)."""
    parts = []
    for w, b in zip(model.weights, model.biases):
        parts.append(w.ravel())
        parts.append(b.ravel())
    return np.concatenate(parts)


def set_params_vector(model: MlpModel, vec: np.ndarray) -> None:
    pos = 0
    for w, b in zip(model.weights, model.biases):
        w[...] = vec[pos:pos + w.size].reshape(w.shape)
        pos += w.size
        b[...] = vec[pos:pos + b.size]
        pos += b.size
    if pos != vec.size:
        raise ValueError("parameter vector has wrong length")


def grads_vector(grads) -> np.ndarray:
    parts = []
    for gw, gb in grads:
        parts.append(gw.ravel())
        parts.append(gb.ravel())
    return np.concatenate(parts)


def save_checkpoint(model: MlpModel, path) -> None:
    """Versioned flat-text checkpoint: dims, then row-major weights and biases."""
    with open(path, "w") as fh:
        fh.write(f"{_CHECKPOINT_MAGIC} {_CHECKPOINT_VERSION}\n")
        fh.write("dims " + " ".join(str(d) for d in model.dims) + "\n")
        for i, (w, b) in enumerate(zip(model.weights, model.biases)):
            fh.write(f"layer {i} {w.shape[0]} {w.shape[1]}\n")
            for row in w:
                fh.write(" ".join(f"{x:.17g}" for x in row) + "\n")
            fh.write(" ".join(f"{x:.17g}" for x in b) + "\n")


def load_checkpoint(path) -> MlpModel:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2 or header[0] != _CHECKPOINT_MAGIC:
            raise ValueError(f"{path}: not an arrowtime checkpoint")
        if int(header[1]) != _CHECKPOINT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {header[1]}")
        dims_line = fh.readline().split()
        if dims_line[0] != "dims":
            raise ValueError(f"{path}: missing dims line")
        dims = [int(x) for x in dims_line[1:]]
        weights, biases = [], []
        for i, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
            tag = fh.readline().split()
            if tag[:2] != ["layer", str(i)]:
                raise ValueError(f"{path}: malformed layer header {tag}")
            w = np.empty((fan_in, fan_out))
            for r in range(fan_in):
                w[r] = np.array(fh.readline().split(), dtype=float)
            b = np.array(fh.readline().split(), dtype=float)
            if b.shape != (fan_out,):
                raise ValueError(f"{path}: bias length mismatch in layer {i}")
            weights.append(w)
            biases.append(b)
    return MlpModel(weights, biases)
