"""End-to-end potential training: buffer -> minibatches -> loss -> Adam.

The buffer is filled once and frozen; a slice of trajectories is held out and
never sampled during training. The held-out mean per-step potential change is
the logged progress metric and the optional early-stopping criterion.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from . import model as nn
from .envs import EnvConfig, make_env
from .sampling import Buffer, all_pairs, fill_buffer, sample_minibatch

EARLY_STOP_DEFAULT_PATIENCE = 10


@dataclass
class TrainConfig:
    env: EnvConfig = field(default_factory=EnvConfig)
    m: int = 4096
    n: int = 128
    iterations: int = 10000
    batch_size: int = 128
    lam: float = 0.0
    regularizer: str = nn.NO_REG          # "none" | "trajectory"
    lr: float = 1e-4
    weight_decay: float = 0.0
    grad_clip: float | None = None
    hidden: tuple = (256, 256)
    input_scale: float = 1.0
    eval_every: int = 100
    holdout_frac: float = 0.05
    early_stop_patience: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch size must be at least 1")
        if self.lam < 0.0:
            raise ValueError("lam must be non-negative")


@dataclass
class TrainLog:
    iterations: list = field(default_factory=list)
    loss: list = field(default_factory=list)
    heldout_mean_dh: list = field(default_factory=list)
    param_norm: list = field(default_factory=list)

    def append(self, iteration, loss, mean_dh, norm):
        self.iterations.append(int(iteration))
        self.loss.append(float(loss))
        self.heldout_mean_dh.append(float(mean_dh))
        self.param_norm.append(float(norm))

    def save_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "loss", "heldout_mean_dh", "param_norm"])
            for row in zip(self.iterations, self.loss, self.heldout_mean_dh, self.param_norm):
                writer.writerow([row[0]] + [repr(x) for x in row[1:]])


def holdout_split(m: int, frac: float) -> int:
    """Number of trajectories available for training; the tail is held out."""
    held = max(1, round(m * frac)) if frac > 0 else 0
    if held >= m:
        raise ValueError("holdout fraction leaves no training trajectories")
    return m - held


def _mean_dh(model, states: np.ndarray, scale: float) -> float:
    s0, s1 = all_pairs(states)
    if scale != 1.0:
        s0 = s0 * scale
        s1 = s1 * scale
    return float(np.mean(nn.forward(model, s1) - nn.forward(model, s0)))


def train(config: TrainConfig, buffer: Buffer | None = None,
          init_model: nn.MlpModel | None = None):
    """Run the training loop; returns (model, TrainLog, buffer)."""
    root = np.random.SeedSequence(config.seed)
    buffer_seed, init_seed, batch_seed = [int(s.generate_state(1)[0]) for s in root.spawn(3)]

    if buffer is None:
        env = make_env(replace(config.env, episode_len=config.n))
        buffer = fill_buffer(env, config.m, config.n, buffer_seed)
    scale = config.input_scale
    m_train = holdout_split(buffer.m, config.holdout_frac)
    heldout = buffer.states[m_train:]

    if init_model is None:
        model = nn.init_mlp(buffer.dim, list(config.hidden), init_seed)
    else:
        model = init_model.copy()
    opt = nn.AdamState.for_model(model, lr=config.lr, weight_decay=config.weight_decay)
    batch_rng = np.random.default_rng(batch_seed)

    log = TrainLog()
    best = -np.inf
    stale = 0
    for it in range(1, config.iterations + 1):
        s0, s1 = sample_minibatch(buffer, config.batch_size, batch_rng, m_limit=m_train)
        if scale != 1.0:
            s0 = s0 * scale
            s1 = s1 * scale
        loss, grads = nn.loss_and_grad(model, s0, s1, config.lam, config.regularizer)
        if config.grad_clip:
            nn.clip_grads(grads, config.grad_clip)
        nn.adam_step(model, opt, grads)

        if it % config.eval_every == 0 or it == config.iterations:
            mean_dh = _mean_dh(model, heldout, scale) if heldout.size else 0.0
            norm = float(np.linalg.norm(nn.params_vector(model)))
            log.append(it, loss, mean_dh, norm)
            if config.early_stop_patience is not None:
                if mean_dh > best:
                    best = mean_dh
                    stale = 0
                else:
                    stale += 1
                    if stale >= config.early_stop_patience:
                        break
    return model, log, buffer


def evaluate_along_trajectory(model: nn.MlpModel, states: np.ndarray,
                              input_scale: float = 1.0):
    """Potential values h(s_t) and consecutive differences along one trajectory."""
    states = np.asarray(states, dtype=float)
    if states.ndim != 2:
        raise ValueError("expected a (N+1, D) trajectory")
    h = nn.forward(model, states * input_scale if input_scale != 1.0 else states)
    return h, np.diff(h)


def default_config(kind: str) -> TrainConfig:
    """Full-scale per-environment settings (as reported for each experiment)."""
    base = TrainConfig(env=EnvConfig(kind=kind))
    if kind == "vases":
        return replace(base, m=4096, n=128, iterations=10000, batch_size=128,
                       weight_decay=0.005, hidden=(256, 256))
    if kind == "tomato":
        return replace(base, m=4096, n=128, iterations=10000, batch_size=128,
                       lam=0.5, regularizer=nn.TRAJECTORY_REG, hidden=(256, 256))
    if kind == "sokoban":
        return replace(base, m=4096, n=512, iterations=20000, batch_size=256,
                       lam=0.05, regularizer=nn.TRAJECTORY_REG, hidden=(512, 512))
    if kind == "mountaincar":
        return replace(base, m=4096, n=256, iterations=20000, batch_size=1024,
                       lam=1.0, regularizer=nn.TRAJECTORY_REG, hidden=(256, 256))
    if kind == "pendulum":
        return replace(base, m=4096, n=256, iterations=20000, batch_size=1024,
                       lam=1.0, regularizer=nn.TRAJECTORY_REG, hidden=(256, 256))
    if kind == "ou":
        return replace(base, m=8192, n=64, iterations=20000, batch_size=1024,
                       weight_decay=0.0005, hidden=(512, 512))
    raise ValueError(f"unknown environment kind {kind!r}")
