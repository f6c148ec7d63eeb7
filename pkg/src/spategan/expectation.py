"""Spatio-temporal expectations for single-channel gridded sequences.

For a batch item x with frames indexed t and pixels indexed i, three
expectation fields are supported, all of the separable form

    mu_it = (spatial sum at t) * (temporal sum at i) / (normalising total)

* ``k``   unweighted: temporal sums run over all frames,
          mu_it = (sum_j x_jt)(sum_t' x_it') / (sum_j sum_t' x_jt')
* ``kw``  kernel-weighted: every temporal sum weights frame t' by
          b(t, t') = exp(-|t - t'| / l), in numerator and denominator
* ``ksw`` causal kernel-weighted: like kw but only past frames t' < t
          enter the sums.  Frame 0 has no past; it is filled with the
          frame itself (so its residual is zero) and flagged invalid.

Expectations are computed independently per batch item.  Any normalising
denominator within ``eps_total`` of zero raises a loud error instead of
returning garbage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTotalError, ShapeError, ValidationError
from .tensor import SpatioTemporalBatch

__all__ = [
    "VARIANTS",
    "ExpectationConfig",
    "ExpectationField",
    "temporal_kernel",
    "expectation",
]

VARIANTS = ("k", "kw", "ksw")

#: Default kernel lengthscale for the weighted variants.
DEFAULT_LENGTHSCALE = 20.0

#: Normalising sums closer to zero than this are treated as degenerate.
DEFAULT_EPS_TOTAL = 1e-12


@dataclass(frozen=True)
class ExpectationConfig:
    variant: str
    lengthscale: float = DEFAULT_LENGTHSCALE
    eps_total: float = DEFAULT_EPS_TOTAL

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValidationError(f"unknown variant {self.variant!r}; use one of {VARIANTS}")
        if not (self.lengthscale > 0.0 and math.isfinite(self.lengthscale)):
            raise ValidationError(f"lengthscale must be positive and finite, got {self.lengthscale}")
        if not (self.eps_total > 0.0):
            raise ValidationError("eps_total must be positive")


@dataclass(frozen=True)
class ExpectationField:
    """Per-pixel expectations, shape (B, T, H, W), plus frame validity."""

    values: np.ndarray
    valid: np.ndarray  # (T,) bool; False only for frame 0 under ksw
    variant: str
    lengthscale: float


def temporal_kernel(t: int, t_prime: int, lengthscale: float = DEFAULT_LENGTHSCALE) -> float:
    """Exponential time-distance weight exp(-|t - t'| / l), in (0, 1]."""
    if not (lengthscale > 0.0 and math.isfinite(lengthscale)):
        raise ValidationError(f"lengthscale must be positive and finite, got {lengthscale}")
    return math.exp(-abs(int(t) - int(t_prime)) / lengthscale)


def _kernel_matrix(t_steps: int, lengthscale: float) -> np.ndarray:
    idx = np.arange(t_steps, dtype=np.float64)
    return np.exp(-np.abs(idx[:, None] - idx[None, :]) / lengthscale)


def _as_single_channel(seq) -> np.ndarray:
    """Accept a SpatioTemporalBatch with C=1 or a raw (B, T, H, W) array."""
    if isinstance(seq, SpatioTemporalBatch):
        if seq.dims[2] != 1:
            raise ShapeError(f"expected a single-channel batch, got C={seq.dims[2]}")
        return seq.channel(0)
    x = np.asarray(seq, dtype=np.float64)
    if x.ndim != 4:
        raise ShapeError(f"expected (B, T, H, W), got shape {x.shape}")
    return x


def _check_totals(totals: np.ndarray, eps: float, what: str) -> None:
    bad = np.abs(totals) < eps
    if np.any(bad):
        where = np.argwhere(bad)[0]
        raise DegenerateTotalError(
            f"degenerate total: {what} is within {eps} of zero (first at index {tuple(where)})"
        )


def expectation_values(
    x: np.ndarray, variant: str, lengthscale: float, eps_total: float
) -> tuple[np.ndarray, np.ndarray]:
    """Core on a raw (B, T, H, W) array; returns (values, valid-frame mask)."""
    b, t_steps, h, w = x.shape
    spatial = x.sum(axis=(2, 3))  # (B, T)
    valid = np.ones(t_steps, dtype=bool)

    if variant == "k":
        temporal = x.sum(axis=1)  # (B, H, W)
        grand = spatial.sum(axis=1)  # (B,)
        _check_totals(grand, eps_total, "grand total")
        mu = spatial[:, :, None, None] * temporal[:, None, :, :] / grand[:, None, None, None]
        return mu, valid

    kernel = _kernel_matrix(t_steps, lengthscale)
    if variant == "ksw":
        if t_steps < 2:
            raise ValidationError("sequential variant needs at least two frames")
        kernel = np.tril(kernel, k=-1)  # strictly past frames only

    weighted = np.einsum("tq,bqhw->bthw", kernel, x)  # (B, T, H, W)
    denom = weighted.sum(axis=(2, 3))  # (B, T)

    if variant == "kw":
        _check_totals(denom, eps_total, "kernel-weighted total")
        mu = weighted * (spatial / denom)[:, :, None, None]
        return mu, valid

    if variant == "ksw":
        _check_totals(denom[:, 1:], eps_total, "causal kernel-weighted total")
        safe = np.where(np.abs(denom) < eps_total, 1.0, denom)
        mu = weighted * (spatial / safe)[:, :, None, None]
        mu[:, 0] = x[:, 0]  # no past: residual defined as zero
        valid = valid.copy()
        valid[0] = False
        return mu, valid

    raise ValidationError(f"unknown variant {variant!r}")


def expectation(seq, config: ExpectationConfig) -> ExpectationField:
    """Expectation field for a single-channel batch under ``config``."""
    x = _as_single_channel(seq)
    values, valid = expectation_values(x, config.variant, config.lengthscale, config.eps_total)
    valid.setflags(write=False)
    values.setflags(write=False)
    return ExpectationField(
        values=values, valid=valid, variant=config.variant, lengthscale=config.lengthscale
    )
