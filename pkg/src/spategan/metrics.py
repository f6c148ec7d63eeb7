"""Sample-quality metrics between a real and a synthetic set of sequences.

Items are compared as flattened vectors.  Conventions that matter:

* ``emd`` returns the SUM of matched Euclidean distances over the optimal
  bijection (not the mean), so magnitudes grow with n.
* ``mmd_squared`` uses an RBF kernel; the two within-set sums exclude the
  diagonal while the cross sum runs over all n^2 pairs, so the estimate
  can be negative.
* ``knn_c2st`` pools real (label 1) before synthetic (label 0), splits
  50/50 by a seeded shuffle, classifies the held-out half with 1-nearest-
  neighbour over the training half, and reports accuracy in [0, 1];
  0.5 means the sets are indistinguishable.  Distance ties resolve to the
  lowest training index, so results are exactly reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist, pdist

from .errors import ShapeError, ValidationError
from .rng import SplitMix64
from .tensor import SpatioTemporalBatch

__all__ = ["SampleSet", "emd", "mmd_squared", "knn_c2st", "median_bandwidth"]


@dataclass(frozen=True)
class SampleSet:
    """n flattened sequence vectors, shape (n, D) with n >= 2."""

    vectors: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.vectors, dtype=np.float64)
        if v.ndim != 2:
            raise ShapeError(f"expected (n, D) vectors, got shape {v.shape}")
        if v.shape[0] < 2:
            raise ValidationError(f"need at least 2 items, got {v.shape[0]}")
        if not np.all(np.isfinite(v)):
            raise ValidationError("sample set contains non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @classmethod
    def from_batch(cls, batch: SpatioTemporalBatch) -> "SampleSet":
        b = batch.dims[0]
        return cls(batch.values.reshape(b, -1))


def _vectors(x) -> np.ndarray:
    if isinstance(x, SampleSet):
        return x.vectors
    return SampleSet(np.asarray(x, dtype=np.float64)).vectors


def _paired(p, s) -> tuple[np.ndarray, np.ndarray]:
    pv, sv = _vectors(p), _vectors(s)
    if pv.shape != sv.shape:
        raise ShapeError(f"sets must match in shape: {pv.shape} vs {sv.shape}")
    return pv, sv


def emd(p, s) -> float:
    """Minimum total Euclidean matching distance over bijections P -> S."""
    pv, sv = _paired(p, s)
    distances = cdist(pv, sv)
    rows, cols = linear_sum_assignment(distances)
    return float(distances[rows, cols].sum())


def median_bandwidth(p, s) -> float:
    """Median pairwise Euclidean distance over the pooled set."""
    pooled = np.vstack([_vectors(p), _vectors(s)])
    med = float(np.median(pdist(pooled)))
    return med if med > 0.0 else 1.0


def mmd_squared(p, s, bandwidth: float | None = None) -> float:
    """Squared maximum mean discrepancy under an RBF kernel.

    ``bandwidth`` is the kernel sigma; when omitted the median pairwise
    distance over the pooled set is used.
    """
    pv, sv = _paired(p, s)
    n = pv.shape[0]
    sigma = median_bandwidth(pv, sv) if bandwidth is None else float(bandwidth)
    if not (sigma > 0.0):
        raise ValidationError(f"bandwidth must be positive, got {sigma}")
    gamma = 1.0 / (2.0 * sigma * sigma)

    k_pp = np.exp(-gamma * cdist(pv, pv, "sqeuclidean"))
    k_ss = np.exp(-gamma * cdist(sv, sv, "sqeuclidean"))
    k_ps = np.exp(-gamma * cdist(pv, sv, "sqeuclidean"))
    within_p = (k_pp.sum() - np.trace(k_pp)) / (n * (n - 1))
    within_s = (k_ss.sum() - np.trace(k_ss)) / (n * (n - 1))
    cross = 2.0 * k_ps.sum() / (n * n)
    return float(within_p + within_s - cross)


def knn_c2st(p, s, seed: int) -> float:
    """Held-out 1-nearest-neighbour two-sample test accuracy."""
    pv, sv = _paired(p, s)
    n = pv.shape[0]
    if n < 4:
        raise ValidationError(f"need at least 4 items per set, got {n}")
    pooled = np.vstack([pv, sv])
    labels = np.concatenate([np.ones(n, dtype=np.int64), np.zeros(n, dtype=np.int64)])

    order = SplitMix64(seed).shuffled(2 * n)
    train, test = order[:n], order[n:]
    distances = cdist(pooled[test], pooled[train])
    nearest = distances.argmin(axis=1)  # first minimum = lowest training index
    predicted = labels[train][nearest]
    return float((predicted == labels[test]).mean())
