"""Directed reachability and the reward transformations built on it.

Reachability of s' from s is the potential difference h(s') - h(s): positive
when s' lies downstream of s under the reference policy, antisymmetric and
additive by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .model import MlpModel, forward

IDENTITY = "identity"
STEP = "step"


@dataclass
class RewardShapingConfig:
    beta: float = 4.0
    sigma: str = IDENTITY
    step_threshold: float | None = None
    momentum: float = 0.95

    def __post_init__(self):
        if self.beta < 0.0:
            raise ValueError("beta must be non-negative")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        if self.sigma == STEP and self.step_threshold is None:
            raise ValueError("step transfer requires a threshold")
        if self.sigma not in (IDENTITY, STEP):
            raise ValueError(f"unknown transfer function {self.sigma!r}")

    def transfer(self) -> Callable[[float], float]:
        if self.sigma == STEP:
            thr = self.step_threshold
            return lambda eta: 1.0 if eta >= thr else 0.0
        return lambda eta: eta


def eta(model: MlpModel, s: np.ndarray, s_next: np.ndarray) -> float:
    """Directed reachability of s_next from s: h(s_next) - h(s)."""
    return forward(model, s_next) - forward(model, s)


def eta_series(model: MlpModel, states: np.ndarray) -> np.ndarray:
    """Consecutive reachabilities along a (N+1, D) trajectory, shape (N,)."""
    h = forward(model, states)
    return np.diff(h)


def safety_reward(r: float, eta_value: float, config: RewardShapingConfig) -> float:
    """r - beta * max(sigma(eta), 0): penalize transitions that raise the potential."""
    return r - config.beta * max(config.transfer()(eta_value), 0.0)


def curiosity_reward(eta_value: float) -> float:
    """-eta: reward reaching states a random policy rarely gets to."""
    return -eta_value


def tomato_intrinsic(eta_values: np.ndarray, momentum: float = 0.95) -> np.ndarray:
    """Reward series -(eta_t - avg_t) with an exponential running average.

    The average starts at the first eta, so the operator is exactly
    shift-equivariant; each later step updates avg <- m*avg + (1-m)*eta.
    """
    eta_values = np.asarray(eta_values, dtype=float)
    if eta_values.size == 0:
        raise ValueError("eta series must be non-empty")
    rewards = np.empty_like(eta_values)
    avg = eta_values[0]
    rewards[0] = 0.0
    for t in range(1, eta_values.size):
        avg = momentum * avg + (1.0 - momentum) * eta_values[t]
        rewards[t] = -(eta_values[t] - avg)
    return rewards
