"""Entropic optimal transport between equal-size batches of sequences.

Couplings live on m x m cost matrices with uniform marginals 1/m.  The
entropic value is

    W = sum_ij plan_ij * C_ij - eps * H(plan),   H(plan) = -sum plan log plan

computed from potentials found by log-domain Sinkhorn iterations (the
alternating updates run on log-scaled potentials with a max-subtracted
log-sum-exp, so small eps never under- or overflows the kernel).  The
iteration loop is compiled with numba; batched solves process each matrix
with exactly the same per-slice operation order as a single solve, so
results are independent of batching and thread counts.

Also here: the exact (unregularised) brute-force value over permutations,
the pairwise squared-error base cost between sequences, the causally
adjusted cost built from a pair of adapted process readouts, and the
martingale deviation penalty used by the trainer.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import NumericalError, ShapeError, ValidationError
from .tensor import SpatioTemporalBatch

__all__ = [
    "SinkhornConfig",
    "SinkhornResult",
    "sinkhorn",
    "exact_ot_bruteforce",
    "base_cost",
    "causal_cost",
    "DiscriminatorEvals",
    "martingale_penalty",
    "mixed_sinkhorn_divergence",
]

_BRUTEFORCE_LIMIT = 8


@dataclass(frozen=True)
class SinkhornConfig:
    """Solver settings: regulariser, iteration cap, marginal tolerance.

    ``tol`` <= 0 disables early stopping so exactly ``iterations`` rounds
    run; this keeps the value a smooth function of the costs, which the
    finite-difference trainer relies on.
    """

    epsilon: float = 0.8
    iterations: int = 100
    tol: float = 1e-9

    def __post_init__(self):
        if not (self.epsilon > 0.0 and math.isfinite(self.epsilon)):
            raise ValidationError(f"epsilon must be positive and finite, got {self.epsilon}")
        if self.iterations < 1:
            raise ValidationError(f"iterations must be >= 1, got {self.iterations}")


@dataclass(frozen=True)
class SinkhornResult:
    plan: np.ndarray  # (m, m), rows ~ first batch, columns ~ second
    value: float
    marginal_error: float
    iterations: int


def _validate_cost(c: np.ndarray) -> np.ndarray:
    c = np.ascontiguousarray(c, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ShapeError(f"cost matrix must be square, got shape {c.shape}")
    if not np.all(np.isfinite(c)):
        raise ValidationError("cost matrix contains non-finite values")
    if np.any(c < 0.0):
        raise ValidationError("cost matrix contains negative entries")
    return c


@njit(cache=True)
def _potentials_one(c, eps, max_iters, tol):
    """Log-domain Sinkhorn potentials for one (m, m) cost matrix.

    The loop runs on eps-scaled quantities (potential / eps, cost / eps)
    so the inner sums are pure adds and exps; results rescale on return.
    """
    m = c.shape[0]
    log_a = -np.log(m)  # log of the uniform marginal 1/m
    a = 1.0 / m
    ce = c / eps
    fs = np.zeros(m, dtype=np.float64)
    gs = np.zeros(m, dtype=np.float64)
    iters = 0
    for _ in range(max_iters):
        for i in range(m):
            mx = -np.inf
            for j in range(m):
                s = gs[j] - ce[i, j]
                if s > mx:
                    mx = s
            acc = 0.0
            for j in range(m):
                acc += np.exp(gs[j] - ce[i, j] - mx)
            fs[i] = log_a - (mx + np.log(acc))
        for j in range(m):
            mx = -np.inf
            for i in range(m):
                s = fs[i] - ce[i, j]
                if s > mx:
                    mx = s
            acc = 0.0
            for i in range(m):
                acc += np.exp(fs[i] - ce[i, j] - mx)
            gs[j] = log_a - (mx + np.log(acc))
        iters += 1
        if tol > 0.0:
            err = 0.0
            for i in range(m):
                row = 0.0
                for j in range(m):
                    row += np.exp(fs[i] + gs[j] - ce[i, j])
                d = abs(row - a)
                if d > err:
                    err = d
            for j in range(m):
                col = 0.0
                for i in range(m):
                    col += np.exp(fs[i] + gs[j] - ce[i, j])
                d = abs(col - a)
                if d > err:
                    err = d
            if err <= tol:
                break
    return fs * eps, gs * eps, iters


@njit(cache=True)
def _potentials_batch(cs, eps, max_iters, tol):
    """Independent solves for a (K, m, m) stack, slice order preserved."""
    k = cs.shape[0]
    m = cs.shape[1]
    fs = np.empty((k, m), dtype=np.float64)
    gs = np.empty((k, m), dtype=np.float64)
    its = np.empty(k, dtype=np.int64)
    for s in range(k):
        f, g, it = _potentials_one(cs[s], eps, max_iters, tol)
        fs[s] = f
        gs[s] = g
        its[s] = it
    return fs, gs, its


def _assemble_batch(cs: np.ndarray, eps: float, fs: np.ndarray, gs: np.ndarray):
    """Plans, values and marginal errors from potentials, batched."""
    log_plan = (fs[:, :, None] + gs[:, None, :] - cs) / eps
    plans = np.exp(log_plan)
    # plan entries are bounded by ~1/m so plan * log_plan never produces nan
    values = np.einsum("kij,kij->k", plans, cs) + eps * np.einsum("kij,kij->k", plans, log_plan)
    a = 1.0 / cs.shape[1]
    row_err = np.abs(plans.sum(axis=2) - a).max(axis=1)
    col_err = np.abs(plans.sum(axis=1) - a).max(axis=1)
    errors = np.maximum(row_err, col_err)
    return plans, values, errors


def _solve_batch(cs: np.ndarray, config: SinkhornConfig):
    fs, gs, its = _potentials_batch(cs, config.epsilon, config.iterations, config.tol)
    if not (np.all(np.isfinite(fs)) and np.all(np.isfinite(gs))):
        raise NumericalError("sinkhorn potentials became non-finite")
    return _assemble_batch(cs, config.epsilon, fs, gs) + (its,)


def sinkhorn(cost: np.ndarray, config: SinkhornConfig = SinkhornConfig()) -> SinkhornResult:
    """Entropic transport value for one cost matrix under uniform marginals."""
    c = _validate_cost(cost)
    plans, values, errors, its = _solve_batch(c[None, :, :], config)
    return SinkhornResult(
        plan=plans[0],
        value=float(values[0]),
        marginal_error=float(errors[0]),
        iterations=int(its[0]),
    )


def exact_ot_bruteforce(cost: np.ndarray) -> float:
    """Unregularised transport value by enumerating all m! assignments.

    With uniform marginals the optimum sits on a permutation, so the value
    is (1/m) * min over permutations of the matched cost sum.
    """
    c = _validate_cost(cost)
    m = c.shape[0]
    if m > _BRUTEFORCE_LIMIT:
        raise ValidationError(f"brute force supports m <= {_BRUTEFORCE_LIMIT}, got {m}")
    best = math.inf
    for perm in itertools.permutations(range(m)):
        total = 0.0
        for i, j in enumerate(perm):
            total += c[i, j]
        if total < best:
            best = total
    return best / m


def _sequence_array(x) -> np.ndarray:
    arr = x.values if isinstance(x, SpatioTemporalBatch) else np.asarray(x, dtype=np.float64)
    return np.asarray(arr, dtype=np.float64)


def base_cost(x, y) -> float:
    """Squared error between two sequences, summed over every element."""
    xa = _sequence_array(x)
    ya = _sequence_array(y)
    if xa.shape != ya.shape:
        raise ShapeError(f"sequence shapes differ: {xa.shape} vs {ya.shape}")
    d = (xa - ya).ravel()
    return float(np.einsum("i,i->", d, d))


def causal_cost(x, y, h_y: np.ndarray, m_x: np.ndarray) -> float:
    """Base cost plus the adapted correction sum_jt h_jt(y) * (M_j,t+1 - M_j,t)(x).

    ``h_y`` holds the first batch of readouts evaluated on y, shape (J, T-1);
    ``m_x`` the martingale readouts evaluated on x, shape (J, T).
    """
    h_y = np.asarray(h_y, dtype=np.float64)
    m_x = np.asarray(m_x, dtype=np.float64)
    if h_y.ndim != 2 or m_x.ndim != 2:
        raise ShapeError("h_y and m_x must be 2-D (J, T-1) and (J, T)")
    if m_x.shape[0] != h_y.shape[0] or m_x.shape[1] != h_y.shape[1] + 1:
        raise ShapeError(
            f"incompatible eval shapes: h {h_y.shape} vs M {m_x.shape}"
        )
    increments = m_x[:, 1:] - m_x[:, :-1]
    return base_cost(x, y) + float(np.einsum("jt,jt->", h_y, increments))


@dataclass(frozen=True)
class DiscriminatorEvals:
    """Adapted readouts for a batch of sequences.

    ``h_values`` has shape (m, J, T-1): entry (d, j, t) is computed from the
    first t+1 frames of sequence d only.  ``m_values`` has shape (m, J, T)
    with the same prefix property.
    """

    h_values: np.ndarray
    m_values: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h_values, dtype=np.float64)
        mv = np.asarray(self.m_values, dtype=np.float64)
        if h.ndim != 3 or mv.ndim != 3:
            raise ShapeError("evals must be 3-D: h (m, J, T-1) and M (m, J, T)")
        if h.shape[0] != mv.shape[0] or h.shape[1] != mv.shape[1] or mv.shape[2] != h.shape[2] + 1:
            raise ShapeError(f"incompatible eval shapes: h {h.shape} vs M {mv.shape}")
        object.__setattr__(self, "h_values", h)
        object.__setattr__(self, "m_values", mv)


def martingale_penalty(m_values: np.ndarray, eta: float) -> float:
    """Mean absolute batch-summed martingale increment, variance-normalised.

    ``m_values`` has shape (m, J, T).  Each process j is scaled by the
    square root of its population variance over all m * T values plus
    ``eta``; increments are summed over the batch before the absolute
    value is taken, then averaged by 1 / (m * T).
    """
    mv = np.asarray(m_values, dtype=np.float64)
    if mv.ndim != 3:
        raise ShapeError(f"m_values must be (m, J, T), got shape {mv.shape}")
    if not (eta > 0.0):
        raise ValidationError("eta must be positive")
    m, _, t_steps = mv.shape
    scale = np.sqrt(mv.var(axis=(0, 2))) + eta  # (J,)
    increments = (mv[:, :, 1:] - mv[:, :, :-1]) / scale[None, :, None]
    return float(np.abs(increments.sum(axis=0)).sum() / (m * t_steps))


def _flatten_batch(x) -> np.ndarray:
    arr = _sequence_array(x)
    if arr.ndim < 2:
        raise ShapeError("a batch needs a leading item axis")
    return arr.reshape(arr.shape[0], -1)


def pairwise_base_cost(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """All-pairs squared-error costs between two flattened batches."""
    uu = np.einsum("id,id->i", u, u)
    vv = np.einsum("id,id->i", v, v)
    cross = u @ v.T
    return np.maximum(uu[:, None] + vv[None, :] - 2.0 * cross, 0.0)


def _causal_term(evals_u: DiscriminatorEvals, evals_v: DiscriminatorEvals) -> np.ndarray:
    inc = evals_u.m_values[:, :, 1:] - evals_u.m_values[:, :, :-1]  # (mu, J, T-1)
    return np.einsum("ujt,vjt->uv", inc, evals_v.h_values)


def mixed_sinkhorn_divergence(
    batch_a,
    batch_b,
    batch_a2,
    batch_b2,
    config: SinkhornConfig = SinkhornConfig(),
    evals: tuple[DiscriminatorEvals, ...] | None = None,
) -> float:
    """Debiased entropic divergence over two pairs of equal-size batches:

        W(a, b) + W(a2, b2) - W(a, a2) - W(b, b2)

    With ``evals`` given (one per batch, in argument order), each pair cost
    becomes the causally adjusted cost: the martingale readouts of the row
    batch paired with the h readouts of the column batch.  On identical
    inputs the four terms cancel exactly and the divergence is 0.0.
    """
    flats = [_flatten_batch(x) for x in (batch_a, batch_b, batch_a2, batch_b2)]
    m = flats[0].shape[0]
    for fl in flats[1:]:
        if fl.shape != flats[0].shape:
            raise ShapeError("all four batches must share one shape")
    if evals is not None and len(evals) != 4:
        raise ValidationError("evals must supply one entry per batch")

    # The causal adjustment may push individual entries negative; the
    # log-domain solver is indifferent to the sign of the costs.
    pairs = ((0, 1), (2, 3), (0, 2), (1, 3))
    costs = np.empty((4, m, m), dtype=np.float64)
    for k, (iu, iv) in enumerate(pairs):
        c = pairwise_base_cost(flats[iu], flats[iv])
        if evals is not None:
            c = c + _causal_term(evals[iu], evals[iv])
        costs[k] = c
    _, values, _, _ = _solve_batch(costs, config)
    return float(((values[0] + values[1]) - values[2]) - values[3])
