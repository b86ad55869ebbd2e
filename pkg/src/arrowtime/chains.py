"""Exact arrow-of-time potentials for finite Markov chains.

Given a row-stochastic transition matrix T, an initial distribution p0 and a
horizon N, the potential h maximizes the expected per-step increase of h along
the chain, subject to one of two regularizers: a plain L2 penalty on h, or a
trajectory penalty on the expected per-step change of h (plus an optional
relative L2 term weighted by omega). Both admit closed-form/linear solutions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_STOCHASTIC_TOL = 1e-12
# Singular values below this fraction of the largest are treated as zero when
# the trajectory-regularized system is rank-deficient (omega = 0).
_RCOND = 1e-10

L2 = "l2"
TRAJECTORY = "trajectory"


@dataclass(frozen=True)
class ChainSpec:
    """Finite Markov chain: n states, row-stochastic transition, initial law, horizon."""

    n: int
    transition: np.ndarray
    initial: np.ndarray
    horizon: int

    def __post_init__(self):
        t = np.asarray(self.transition, dtype=float)
        p0 = np.asarray(self.initial, dtype=float)
        if self.n <= 0:
            raise ValueError("state count must be positive")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if t.shape != (self.n, self.n):
            raise ValueError(f"transition must be {self.n}x{self.n}, got {t.shape}")
        if p0.shape != (self.n,):
            raise ValueError(f"initial must have length {self.n}, got {p0.shape}")
        if np.any(t < 0.0) or np.any(t > 1.0):
            raise ValueError("transition entries must lie in [0, 1]")
        if np.any(p0 < 0.0) or np.any(p0 > 1.0):
            raise ValueError("initial entries must lie in [0, 1]")
        rowsum = t.sum(axis=1)
        bad = np.nonzero(np.abs(rowsum - 1.0) > _STOCHASTIC_TOL)[0]
        if bad.size:
            i = int(bad[0])
            raise ValueError(f"row {i + 1} sums to {rowsum[i]:g}")
        if abs(p0.sum() - 1.0) > _STOCHASTIC_TOL:
            raise ValueError(f"initial sums to {p0.sum():g}")
        object.__setattr__(self, "transition", t)
        object.__setattr__(self, "initial", p0)


@dataclass(frozen=True)
class SolverParams:
    """Regularizer weights: lam > 0 overall, omega >= 0 for the relative L2 term."""

    lam: float
    omega: float = 0.0

    def __post_init__(self):
        if self.lam <= 0.0:
            raise ValueError("lam must be strictly positive")
        if self.omega < 0.0:
            raise ValueError("omega must be non-negative")


def propagate(chain: ChainSpec, t: int) -> np.ndarray:
    """Distribution after t transitions, p0 T^t, via repeated vector-matrix products."""
    if t < 0:
        raise ValueError("t must be non-negative")
    p = chain.initial.copy()
    for _ in range(t):
        p = p @ chain.transition
    return p


def _step_differences(chain: ChainSpec) -> np.ndarray:
    """Rows v_t = p^{t+1} - p^t for t = 0..N-1, shape (N, n)."""
    out = np.empty((chain.horizon, chain.n))
    p = chain.initial.copy()
    for t in range(chain.horizon):
        nxt = p @ chain.transition
        out[t] = nxt - p
        p = nxt
    return out


def solve_l2(chain: ChainSpec, params: SolverParams) -> np.ndarray:
    """Optimal h under the plain L2 regularizer: (p0 T^N - p0) / lam."""
    return (propagate(chain, chain.horizon) - chain.initial) / params.lam


def solve_traj_reg(chain: ChainSpec, params: SolverParams) -> np.ndarray:
    """Optimal h under the trajectory regularizer.

    Solves (sum_t v_t v_t^T + omega I) h = (p0 T^N - p0) / lam with
    v_t = p^{t+1} - p^t. When the system matrix is singular (e.g. omega = 0)
    the minimum-norm least-squares solution is returned.
    """
    v = _step_differences(chain)
    a = v.T @ v + params.omega * np.eye(chain.n)
    b = (propagate(chain, chain.horizon) - chain.initial) / params.lam
    h, *_ = np.linalg.lstsq(a, b, rcond=_RCOND)
    return h


def objective_value(chain: ChainSpec, h: np.ndarray, params: SolverParams, reg: str) -> float:
    """Regularized objective L[h] for the chosen regularizer ("l2" or "trajectory").

    The unregularized part is (1/N) sum_t (p^{t+1} - p^t) . h, computed term by
    term; it telescopes to (1/N) (p0 T^N - p0) . h.
    """
    h = np.asarray(h, dtype=float)
    if h.shape != (chain.n,):
        raise ValueError(f"h must have length {chain.n}")
    n_steps = chain.horizon
    v = _step_differences(chain)
    gains = v @ h
    j = gains.sum() / n_steps
    if reg == L2:
        penalty = np.dot(h, h) / (2.0 * n_steps)
    elif reg == TRAJECTORY:
        penalty = (np.dot(gains, gains) + params.omega * np.dot(h, h)) / (2.0 * n_steps)
    else:
        raise ValueError(f"unknown regularizer {reg!r}")
    return float(j - params.lam * penalty)


def two_state_chain(alpha: float, horizon: int = 1) -> ChainSpec:
    """Two-state chain with rows (1-alpha, alpha) and uniform initial law."""
    t = np.array([[1.0 - alpha, alpha], [1.0 - alpha, alpha]])
    return ChainSpec(2, t, np.array([0.5, 0.5]), horizon)


def four_state_chain(horizon: int = 4) -> ChainSpec:
    """Irreversible path s1 -> s2 -> s3 -> s4 (absorbing), started at s1."""
    t = np.zeros((4, 4))
    t[0, 1] = t[1, 2] = t[2, 3] = t[3, 3] = 1.0
    return ChainSpec(4, t, np.array([1.0, 0.0, 0.0, 0.0]), horizon)


def two_state_gamma(alpha: float, lam: float) -> float:
    """Closed-form L2 solution scale for the two-state chain: h = (-g, g)."""
    return (alpha - 0.5) / lam


def two_state_gamma_traj(alpha: float, lam: float, omega: float) -> float:
    """Closed-form trajectory-regularized scale for the two-state chain.

    gamma~ = (2a - 1) / (lam (4a^2 - 4a + 2w + 1)); undefined (0/0) only at
    a = 1/2, w = 0 where the chain is exactly reversible and h = 0.
    """
    den = lam * (4.0 * alpha * alpha - 4.0 * alpha + 2.0 * omega + 1.0)
    num = 2.0 * alpha - 1.0
    if den == 0.0:
        return 0.0
    return num / den


def parse_chain_file(text: str) -> tuple[ChainSpec, SolverParams]:
    """Parse a plain-text chain spec.

    Schema (one `key = values` pair per line, `#` comments allowed):

        n = 4
        horizon = 4
        lambda = 0.5
        omega = 0.0
        row = 0 1 0 0        # transition rows, in order, n of them
        ...
        initial = 1 0 0 0

    Raises ValueError with a line number on malformed input.
    """
    n = horizon = None
    lam = None
    omega = 0.0
    rows: list[np.ndarray] = []
    initial = None

    def fail(lineno, msg):
        raise ValueError(f"line {lineno}: {msg}")

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            fail(lineno, f"expected 'key = value', got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key = key.strip().lower()
        value = value.strip()
        try:
            if key == "n":
                n = int(value)
            elif key == "horizon":
                horizon = int(value)
            elif key == "lambda":
                lam = float(value)
            elif key == "omega":
                omega = float(value)
            elif key == "row":
                rows.append(np.array([float(x) for x in value.split()]))
            elif key == "initial":
                initial = np.array([float(x) for x in value.split()])
            else:
                fail(lineno, f"unknown key {key!r}")
        except ValueError as err:
            if str(err).startswith("line "):
                raise
            fail(lineno, f"could not parse value for {key!r}: {value!r}")
        if key == "row" and n is not None and rows[-1].shape != (n,):
            fail(lineno, f"row has {rows[-1].size} entries, expected {n}")

    for name, val in (("n", n), ("horizon", horizon), ("lambda", lam), ("initial", initial)):
        if val is None:
            raise ValueError(f"missing required key {name!r}")
    if len(rows) != n:
        raise ValueError(f"expected {n} transition rows, got {len(rows)}")
    chain = ChainSpec(n, np.vstack(rows), initial, horizon)
    return chain, SolverParams(lam=lam, omega=omega)
