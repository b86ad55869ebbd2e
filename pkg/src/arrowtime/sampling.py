"""Random-policy rollouts and the frozen trajectory buffer.

A buffer holds M trajectories of exactly N transitions each, collected once
with per-trajectory seeds derived from the master seed, so the contents are
reproducible no matter how the fill is scheduled.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np


def trajectory_rng(master_seed: int, k: int) -> np.random.Generator:
    """Generator for trajectory k, hashed from (master seed, k)."""
    return np.random.default_rng(np.random.SeedSequence((master_seed, k)))


@dataclass
class Trajectory:
    states: np.ndarray          # (N+1, D) encoded states
    actions: list
    env_kind: str
    seed: int
    episode: int


@dataclass
class Buffer:
    states: np.ndarray          # (M, N+1, D)
    env_kind: str
    seed: int
    actions: list | None = None  # per trajectory, kept for dumps

    @property
    def m(self) -> int:
        return self.states.shape[0]

    @property
    def n(self) -> int:
        return self.states.shape[1] - 1

    @property
    def dim(self) -> int:
        return self.states.shape[2]


def rollout(env, length: int, seed: int, episode: int = 0) -> Trajectory:
    """One trajectory of `length` uniformly random actions; returns N+1 states."""
    if length < 0:
        raise ValueError("length must be non-negative")
    rng = trajectory_rng(seed, episode)
    state = env.reset(rng)
    states = np.empty((length + 1, env.state_dim))
    states[0] = env.encode(state)
    actions = []
    for t in range(length):
        action = env.sample_action(rng)
        state, _ = env.step(state, action, rng)
        states[t + 1] = env.encode(state)
        actions.append(action)
    return Trajectory(states, actions, env.kind, seed, episode)


def fill_buffer(env, m: int, n: int, seed: int, threads: int = 1) -> Buffer:
    """M independent rollouts with per-trajectory derived seeds, placed by index."""
    if m <= 0 or n <= 0:
        raise ValueError("m and n must be positive")
    states = np.empty((m, n + 1, env.state_dim))
    actions = [None] * m

    def run(k):
        traj = rollout(env, n, seed, episode=k)
        states[k] = traj.states
        actions[k] = traj.actions

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, range(m)))
    else:
        for k in range(m):
            run(k)
    return Buffer(states, env.kind, seed, actions)


def sample_indices(buffer: Buffer, batch_size: int, rng: np.random.Generator,
                   m_limit: int | None = None):
    """Uniform (trajectory, time-step) index pairs; t ranges over 0..N-1."""
    if buffer.m == 0 or buffer.n == 0:
        raise ValueError("cannot sample from an empty buffer")
    m = buffer.m if m_limit is None else m_limit
    ks = rng.integers(0, m, size=batch_size)
    ts = rng.integers(0, buffer.n, size=batch_size)
    return ks, ts


def gather_pairs(buffer: Buffer, ks: np.ndarray, ts: np.ndarray):
    s0 = buffer.states[ks, ts]
    s1 = buffer.states[ks, ts + 1]
    return s0, s1


def sample_minibatch(buffer: Buffer, batch_size: int, rng: np.random.Generator,
                     m_limit: int | None = None):
    """batch_size iid consecutive-state pairs (s_t, s_{t+1})."""
    ks, ts = sample_indices(buffer, batch_size, rng, m_limit)
    return gather_pairs(buffer, ks, ts)


def all_pairs(states: np.ndarray):
    """Every consecutive pair in a (M, N+1, D) block, flattened to (M*N, D)."""
    s0 = states[:, :-1, :].reshape(-1, states.shape[2])
    s1 = states[:, 1:, :].reshape(-1, states.shape[2])
    return s0, s1


def _format(x) -> str:
    return repr(float(x))


def save_trajectories(buffer: Buffer, csv_path, manifest_path=None) -> None:
    """Dump as CSV (one row per step: episode, t, flattened state, action)."""
    dim = buffer.dim
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["episode", "t"] + [f"s{i}" for i in range(dim)] + ["action"])
        for k in range(buffer.m):
            for t in range(buffer.n + 1):
                if buffer.actions and buffer.actions[k] and t < buffer.n:
                    action = buffer.actions[k][t]
                    action_field = "" if action is None else repr(action)
                else:
                    action_field = ""
                row = [k, t] + [_format(x) for x in buffer.states[k, t]] + [action_field]
                writer.writerow(row)
    if manifest_path is not None:
        manifest = {"env_kind": buffer.env_kind, "m": buffer.m, "n": buffer.n,
                    "dim": dim, "seed": buffer.seed}
        with open(manifest_path, "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")


def load_trajectories(csv_path, manifest_path=None) -> Buffer:
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        dim = len(header) - 3
        rows = {}
        for row in reader:
            k, t = int(row[0]), int(row[1])
            rows[(k, t)] = np.array(row[2:2 + dim], dtype=float)
    m = max(k for k, _ in rows) + 1
    n = max(t for _, t in rows)
    states = np.empty((m, n + 1, dim))
    for (k, t), vec in rows.items():
        states[k, t] = vec
    env_kind, seed = "unknown", 0
    if manifest_path is not None:
        with open(manifest_path) as fh:
            manifest = json.load(fh)
        env_kind = manifest.get("env_kind", env_kind)
        seed = manifest.get("seed", seed)
    return Buffer(states, env_kind, seed)
