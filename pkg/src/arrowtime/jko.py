"""Free-energy comparison for the Ornstein-Uhlenbeck ensemble.

The free energy F = E - S/beta of the per-timestep sample clouds can only
decrease along a Fokker-Planck diffusion, so it is a ground-truth arrow of
time. The learned counterpart is H[t] = -mean h over the cloud at t; after a
non-negative linear rescaling the two series should agree.

The differential entropy is the classic k-nearest-neighbour estimate
    H_hat = psi(n) - psi(k) + log c_d + (d/n) sum_i log eps_i
with eps_i twice the distance from sample i to its k-th neighbour and c_d the
unit-ball volume. Neighbours are found by exact pairwise distances, blocked to
bound memory; n here stays small enough that no index structure is needed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import digamma, gammaln

DEFAULT_BETA_INV = 0.045  # from noise amplitude sqrt(2/beta) = 0.3
_BLOCK = 256
_JITTER = 1e-12


def kth_neighbor_distances(samples: np.ndarray, k: int) -> np.ndarray:
    """Distance from each sample to its k-th nearest neighbour (self excluded)."""
    n = samples.shape[0]
    out = np.empty(n)
    for start in range(0, n, _BLOCK):
        block = samples[start:start + _BLOCK]
        d2 = cdist(block, samples, "sqeuclidean")
        # the self distance 0 occupies one slot, so the k-th neighbour is the
        # (k+1)-th order statistic of the row
        out[start:start + _BLOCK] = np.partition(d2, k, axis=1)[:, k]
    return np.sqrt(out)


def kl_entropy(samples: np.ndarray, k: int = 3) -> float:
    """Differential entropy (nats) of a sample cloud."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2:
        raise ValueError("samples must be a 2-d array (n, d)")
    n, d = samples.shape
    if n <= k:
        raise ValueError(f"need more than k={k} samples, got {n}")
    dist = kth_neighbor_distances(samples, k)
    if np.any(dist == 0.0):
        # duplicate points: break degeneracy with a tiny deterministic jitter
        rng = np.random.default_rng(0)
        jittered = samples + _JITTER * rng.standard_normal(samples.shape)
        dist = kth_neighbor_distances(jittered, k)
    log_cd = (d / 2.0) * np.log(np.pi) - gammaln(d / 2.0 + 1.0)
    eps = 2.0 * dist
    return float(digamma(n) - digamma(k) + log_cd + d * np.mean(np.log(eps)))


def energy_estimate(samples: np.ndarray, psi) -> float:
    """Monte-Carlo mean of the potential over the cloud."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("samples must be non-empty")
    return float(np.mean(psi(samples)))


def free_energy(samples: np.ndarray, psi, beta_inv: float = DEFAULT_BETA_INV,
                k: int = 3) -> float:
    """F = E - beta^{-1} S with S the estimated differential entropy."""
    return energy_estimate(samples, psi) - beta_inv * kl_entropy(samples, k)


def h_functional(model, samples: np.ndarray) -> float:
    """H = -mean h over the cloud; decreases as the potential rises."""
    from .model import forward

    return float(-np.mean(forward(model, samples)))


def fit_linear(h_series: np.ndarray, f_series: np.ndarray):
    """Non-negative 1-d least squares: w = max(0, cov/var), b = mean residual."""
    h = np.asarray(h_series, dtype=float)
    f = np.asarray(f_series, dtype=float)
    if h.shape != f.shape or h.size < 2:
        raise ValueError("series must have equal length >= 2")
    var = np.var(h)
    if var == 0.0:
        return 0.0, float(np.mean(f))
    w = max(0.0, float(np.cov(h, f, bias=True)[0, 1] / var))
    b = float(np.mean(f) - w * np.mean(h))
    return w, b


@dataclass
class DensityEnsemble:
    """Per-timestep sample clouds: clouds[t] is the (M, d) cloud at time t."""

    clouds: np.ndarray  # (N+1, M, d)

    @classmethod
    def from_buffer(cls, buffer) -> "DensityEnsemble":
        return cls(np.swapaxes(buffer.states, 0, 1).copy())

    @property
    def n_steps(self) -> int:
        return self.clouds.shape[0] - 1

    @property
    def samples_per_step(self) -> int:
        return self.clouds.shape[1]


@dataclass
class FunctionalSeries:
    energy: np.ndarray
    entropy: np.ndarray
    free_energy: np.ndarray
    h_functional: np.ndarray
    w: float
    b: float

    @property
    def fitted(self) -> np.ndarray:
        return self.w * self.h_functional + self.b

    def pearson(self) -> float:
        return float(np.corrcoef(self.h_functional, self.free_energy)[0, 1] * np.sign(self.w or 1.0))


def functional_series(ensemble: DensityEnsemble, psi, model,
                      beta_inv: float = DEFAULT_BETA_INV, k: int = 3) -> FunctionalSeries:
    """E, S, F and H per timestep plus the fitted (w, b)."""
    e = np.array([energy_estimate(c, psi) for c in ensemble.clouds])
    s = np.array([kl_entropy(c, k) for c in ensemble.clouds])
    f = e - beta_inv * s
    h = np.array([h_functional(model, c) for c in ensemble.clouds])
    w, b = fit_linear(h, f)
    return FunctionalSeries(e, s, f, h, w, b)


def increment_standard_errors(ensemble: DensityEnsemble, psi,
                              beta_inv: float = DEFAULT_BETA_INV, k: int = 3,
                              replicates: int = 20, seed: int = 0) -> np.ndarray:
    """Standard errors of the per-step increments F[t+1] - F[t].

    Uses half-sample replicates drawn without replacement over trajectories
    (with-replacement resampling would duplicate points and break the
    nearest-neighbour entropy estimate); the replicate spread is scaled by
    sqrt(m/n) back to the full sample size.
    """
    rng = np.random.default_rng(seed)
    m_full = ensemble.samples_per_step
    m_half = m_full // 2
    diffs = np.empty((replicates, ensemble.n_steps))
    for r in range(replicates):
        idx = rng.choice(m_full, size=m_half, replace=False)
        f = np.array([
            energy_estimate(c[idx], psi) - beta_inv * kl_entropy(c[idx], k)
            for c in ensemble.clouds
        ])
        diffs[r] = np.diff(f)
    return diffs.std(axis=0, ddof=1) * np.sqrt(m_half / m_full)
