"""Continuous control and diffusion environments.

Mountain car gains a friction term so the dynamics dissipate energy; the
pendulum is under-damped for the same reason. The walker is a two-dimensional
Ornstein-Uhlenbeck diffusion in an elliptic paraboloid potential.
"""

from __future__ import annotations

import numpy as np


def wrap_angle(theta: float) -> float:
    """Wrap to (-pi, pi]."""
    w = (theta + np.pi) % (2.0 * np.pi) - np.pi
    if w == -np.pi:
        w = np.pi
    return w


class MountainCar:
    """Continuous mountain car with friction.

    Unit-time Euler update: xdot += zeta*f - 0.0025*cos(3x) - alpha*xdot,
    velocity clamped to +-0.07, position clamped to [-1.2, 0.6], inelastic
    left wall. alpha = 0 gives the frictionless (conservative) variant.
    """

    kind = "mountaincar"
    n_actions = None
    action_low, action_high = -1.0, 1.0
    x_min, x_max = -1.2, 0.6
    v_max = 0.07

    def __init__(self, zeta: float = 0.0015, alpha: float = 0.1):
        self.zeta = zeta
        self.alpha = alpha

    @property
    def state_dim(self) -> int:
        return 2

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        x = rng.uniform(self.x_min, self.x_max)
        v = rng.uniform(-self.v_max, self.v_max)
        return np.array([x, v])

    def step(self, state: np.ndarray, action: float, rng=None):
        x, v = state
        v = v + self.zeta * action - 0.0025 * np.cos(3.0 * x) - self.alpha * v
        v = min(max(v, -self.v_max), self.v_max)
        x = min(max(x + v, self.x_min), self.x_max)
        if x <= self.x_min and v < 0.0:
            v = 0.0
        return np.array([x, v]), 0.0

    def sample_action(self, rng: np.random.Generator) -> float:
        return float(rng.uniform(self.action_low, self.action_high))

    def encode(self, state: np.ndarray) -> np.ndarray:
        return np.asarray(state, dtype=float)


class Pendulum:
    """Under-damped torque-driven pendulum, semi-implicit Euler at dt = 0.05.

    thetadd = -(3g/2l) sin(theta) + 3*tau/(m l^2) - alpha*thetadot, with the
    angular velocity clamped to +-8 and the angle wrapped to (-pi, pi].
    States are encoded as (cos(theta), sin(theta), thetadot).
    """

    kind = "pendulum"
    n_actions = None
    action_low, action_high = -2.0, 2.0
    dt = 0.05
    max_speed = 8.0

    def __init__(self, g: float = 10.0, m: float = 1.0, length: float = 1.0,
                 alpha: float = 0.1):
        self.g = g
        self.m = m
        self.length = length
        self.alpha = alpha

    @property
    def state_dim(self) -> int:
        return 3

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        theta = rng.uniform(-np.pi, np.pi)
        thetadot = rng.uniform(-1.0, 1.0)
        return np.array([theta, thetadot])

    def step(self, state: np.ndarray, action: float, rng=None):
        theta, thetadot = state
        acc = (-1.5 * self.g / self.length * np.sin(theta)
               + 3.0 * action / (self.m * self.length ** 2)
               - self.alpha * thetadot)
        thetadot = thetadot + acc * self.dt
        thetadot = min(max(thetadot, -self.max_speed), self.max_speed)
        theta = wrap_angle(theta + thetadot * self.dt)
        return np.array([theta, thetadot]), 0.0

    def sample_action(self, rng: np.random.Generator) -> float:
        return float(rng.uniform(self.action_low, self.action_high))

    def encode(self, state: np.ndarray) -> np.ndarray:
        theta, thetadot = state
        return np.array([np.cos(theta), np.sin(theta), thetadot])


def elliptic_potential(x: np.ndarray) -> np.ndarray:
    """Psi(x) = x1^2/20 + x2^2/40, on (2,) points or (n, 2) batches."""
    x = np.asarray(x, dtype=float)
    return x[..., 0] ** 2 / 20.0 + x[..., 1] ** 2 / 40.0


class OuWalker:
    """2-d Ornstein-Uhlenbeck walker: x <- x - grad(Psi)(x) + noise * xi.

    Unit-time Euler-Maruyama with grad(Psi) = (x1/10, x2/20) and iid standard
    Gaussian xi. There is no action; the process is the policy.
    """

    kind = "ou"
    n_actions = None

    def __init__(self, noise: float = 0.3, start_mean: tuple = (3.0, 3.0),
                 start_std: float = 1.0):
        self.noise = noise
        self.start_mean = np.asarray(start_mean, dtype=float)
        self.start_std = start_std

    @property
    def state_dim(self) -> int:
        return 2

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        return self.start_mean + self.start_std * rng.standard_normal(2)

    def step(self, state: np.ndarray, action=None, rng: np.random.Generator = None):
        drift = np.array([state[0] / 10.0, state[1] / 20.0])
        x = state - drift
        if self.noise:
            x = x + self.noise * rng.standard_normal(2)
        return x, 0.0

    def sample_action(self, rng: np.random.Generator):
        return None

    def encode(self, state: np.ndarray) -> np.ndarray:
        return np.asarray(state, dtype=float)
