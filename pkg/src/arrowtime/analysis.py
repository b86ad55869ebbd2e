"""Signal analysis over potential-difference series: thresholding spike-like
irreversibility events and scoring them against simulator ground truth.
"""

from __future__ import annotations

import numpy as np


def otsu_threshold(values: np.ndarray) -> float:
    """Two-class variance-minimizing split of a 1-d sample.

    Exact scan over the midpoints between consecutive sorted values, maximizing
    the between-class variance w0*w1*(mu0-mu1)^2.
    """
    v = np.sort(np.asarray(values, dtype=float))
    n = v.size
    if n < 2 or v[0] == v[-1]:
        raise ValueError("need at least two distinct values")
    csum = np.cumsum(v)
    total = csum[-1]
    k = np.arange(1, n)                      # lower class sizes
    mu0 = csum[:-1] / k
    mu1 = (total - csum[:-1]) / (n - k)
    between = k * (n - k) * (mu0 - mu1) ** 2
    # skip splits between equal values (threshold would not separate them)
    valid = v[1:] > v[:-1]
    between[~valid] = -np.inf
    best = int(np.argmax(between))
    return float(0.5 * (v[best] + v[best + 1]))


def precision_recall(predicted: np.ndarray, actual: np.ndarray):
    predicted = np.asarray(predicted, dtype=bool)
    actual = np.asarray(actual, dtype=bool)
    tp = int(np.sum(predicted & actual))
    fp = int(np.sum(predicted & ~actual))
    fn = int(np.sum(~predicted & actual))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return precision, recall


def detect_events(dh: np.ndarray) -> np.ndarray:
    """Predicted event mask from |dh| at the Otsu split."""
    mag = np.abs(np.asarray(dh, dtype=float))
    return mag >= otsu_threshold(mag)


def spike_cv(dh: np.ndarray, events: np.ndarray) -> float:
    """Coefficient of variation of the potential jumps at event steps."""
    spikes = np.asarray(dh, dtype=float)[np.asarray(events, dtype=bool)]
    if spikes.size == 0:
        raise ValueError("no event steps")
    mean = spikes.mean()
    if mean == 0.0:
        raise ValueError("event spikes have zero mean")
    return float(spikes.std() / abs(mean))
