"""State augmentation wrappers for the grid worlds.

Appends one extra plane to the encoded state: either temporally uncorrelated
uniform noise (a "noisy TV") or a clock plane whose constant value t/episode_len
grows along the trajectory (a spurious causal signal).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TV_NOISE = "tv"
CAUSAL_CLOCK = "clock"


def noise_channel(kind: str, shape: tuple, t: int, episode_len: int,
                  rng: np.random.Generator = None) -> np.ndarray:
    """One H x W augmentation plane for time-step t."""
    if kind == TV_NOISE:
        return rng.random(shape)
    if kind == CAUSAL_CLOCK:
        return np.full(shape, t / episode_len)
    raise ValueError(f"unknown augmentation kind {kind!r}")


@dataclass(frozen=True)
class AugmentedState:
    inner: object
    t: int
    plane: np.ndarray


class NoiseAugmented:
    """Wrap a grid world so every encoded state carries one extra plane."""

    def __init__(self, inner, kind: str, episode_len: int):
        if kind not in (TV_NOISE, CAUSAL_CLOCK):
            raise ValueError(f"unknown augmentation kind {kind!r}")
        self.inner = inner
        self.aug_kind = kind
        self.episode_len = episode_len
        self.kind = f"{inner.kind}+{kind}"
        self.n_actions = inner.n_actions

    @property
    def plane_shape(self):
        return (self.inner.size, self.inner.size)

    @property
    def state_dim(self) -> int:
        return self.inner.state_dim + self.inner.size * self.inner.size

    def reset(self, rng: np.random.Generator) -> AugmentedState:
        state = self.inner.reset(rng)
        plane = noise_channel(self.aug_kind, self.plane_shape, 0, self.episode_len, rng)
        return AugmentedState(state, 0, plane)

    def step(self, state: AugmentedState, action, rng: np.random.Generator = None):
        inner_next, reward = self.inner.step(state.inner, action, rng)
        t = state.t + 1
        plane = noise_channel(self.aug_kind, self.plane_shape, t, self.episode_len, rng)
        return AugmentedState(inner_next, t, plane), reward

    def sample_action(self, rng: np.random.Generator):
        return self.inner.sample_action(rng)

    def encode(self, state: AugmentedState) -> np.ndarray:
        return np.concatenate([self.inner.encode(state.inner), state.plane.ravel()])

    def __getattr__(self, name):
        # ground-truth helpers (vase_count, box_pinned_push, ...) operate on the
        # leading channels, which the augmentation leaves untouched
        return getattr(self.inner, name)
