"""Empirical probability of localized level sets and mode extraction.

A point's score is the fraction of its k_L nearest other points whose
bagged k-distance is greater than or equal to its own, so every score is
an exact multiple of 1/k_L in [0, 1].  Ties count toward the score; the
comparison is purely ordinal, so any strictly increasing transform of the
distances leaves scores unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .knn import k_distances

_CHUNK = 8192


@dataclass(frozen=True)
class PllsScores:
    """Per-point scores in [0, 1] plus the neighborhood size that made them."""

    values: np.ndarray
    k_l: int

    def __len__(self):
        return len(self.values)


def empirical_plls(ds, idx, bagged, k_l):
    """Score each point against its k_l nearest others (self excluded)."""
    points = ds.points if hasattr(ds, "points") else np.asarray(ds, dtype=np.float64)
    n = points.shape[0]
    if not 1 <= k_l <= n - 1:
        raise ValueError(f"k_l={k_l} out of range [1, {n - 1}]")
    bagged = np.asarray(bagged, dtype=np.float64)
    if bagged.shape != (n,):
        raise ValueError(f"bagged distances have length {bagged.shape}, expected {n}")
    counts = np.empty(n, dtype=np.int64)
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        nbr, _ = idx.query_bulk(points[lo:hi], k_l, exclude=np.arange(lo, hi))
        counts[lo:hi] = (bagged[nbr] >= bagged[lo:hi, None]).sum(axis=1)
    return PllsScores(counts / k_l, k_l)


def mode_set(scores):
    """Indices scoring exactly 1; never empty (the argmin distance scores 1)."""
    return np.flatnonzero(scores.values == 1.0)


def dmbc_plls(ds, idx, k_d, k_l):
    """Non-bagged special case: scores from plain k_d-distances."""
    n = idx.n
    if not 1 <= k_d <= n - 1:
        raise ValueError(f"k_d={k_d} out of range [1, {n - 1}]")
    return empirical_plls(ds, idx, k_distances(idx, k_d), k_l)
