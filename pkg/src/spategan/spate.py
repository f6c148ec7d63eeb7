"""Local spatio-temporal association fields.

Both statistics below share one frame-level form.  Given residuals z_it
(pixel i, frame t) and binary neighbour weights w_ij,

    value_it = (n_i - 1) * z_it / (sum_j z_jt^2) * (sum of z over i's neighbours)

where n_i is pixel i's neighbour count and the squared-residual sum runs
over all pixels of the frame.  Frames whose squared-residual sum falls
below ``eps_var`` (e.g. constant frames) are returned as all zeros rather
than dividing by almost-nothing.

* ``local_morans_i`` uses per-frame residuals z_it = x_it - mean_t(x).
* ``spate`` uses residuals against a spatio-temporal expectation,
  z_it = x_it - mu_it, with mu from the chosen variant (k, kw, ksw).
  Under ksw, frame 0 has no past, its residuals are zero by construction
  and the frame comes out identically zero.

Values are scale-invariant: scaling the input field scales z and the
squared-sum consistently, leaving the statistic unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError, ValidationError
from .expectation import ExpectationConfig, expectation_values, _as_single_channel
from .tensor import SpatioTemporalBatch
from .weights import WeightMatrix

__all__ = ["SpateField", "local_morans_i", "spate", "concat_embedding"]

#: Frames with a squared-residual sum below this are emitted as all zeros.
DEFAULT_EPS_VAR = 1e-12


@dataclass(frozen=True)
class SpateField:
    """Association values, shape (B, T, H, W), plus provenance metadata."""

    values: np.ndarray
    variant: str  # "moran", "k", "kw" or "ksw"
    lengthscale: float
    scheme: str


def _field_from_residuals(
    z: np.ndarray, weights: WeightMatrix, eps_var: float
) -> np.ndarray:
    """Apply the shared frame-level formula to residuals of shape (B, T, H, W)."""
    b, t_steps, h, w = z.shape
    n = weights.n_pixels
    zf = z.reshape(b, t_steps, n)
    sq_sum = np.einsum("btn,btn->bt", zf, zf)  # (B, T)
    neigh = weights.neighbor_sums(zf)  # (B, T, n)
    prefactor = (weights.counts - 1).astype(np.float64)  # (n,)
    live = sq_sum >= eps_var
    denom = np.where(live, sq_sum, 1.0)
    vals = prefactor[None, None, :] * zf * neigh / denom[:, :, None]
    vals *= live[:, :, None]
    return vals.reshape(b, t_steps, h, w)


def _check_grid(x: np.ndarray, weights: WeightMatrix) -> None:
    if x.shape[2] != weights.height or x.shape[3] != weights.width:
        raise ShapeError(
            f"batch grid {x.shape[2]}x{x.shape[3]} does not match "
            f"weights grid {weights.height}x{weights.width}"
        )


def local_morans_i(seq, weights: WeightMatrix, eps_var: float = DEFAULT_EPS_VAR) -> SpateField:
    """Per-frame local Moran's I with residuals against the frame mean."""
    x = _as_single_channel(seq)
    _check_grid(x, weights)
    z = x - x.mean(axis=(2, 3), keepdims=True)
    values = _field_from_residuals(z, weights, eps_var)
    values.setflags(write=False)
    return SpateField(values=values, variant="moran", lengthscale=float("nan"), scheme=weights.scheme)


def spate_values(
    x: np.ndarray,
    weights: WeightMatrix,
    variant: str,
    lengthscale: float,
    eps_total: float,
    eps_var: float = DEFAULT_EPS_VAR,
) -> np.ndarray:
    """Core on a raw (B, T, H, W) array."""
    mu, _ = expectation_values(x, variant, lengthscale, eps_total)
    z = x - mu
    return _field_from_residuals(z, weights, eps_var)


def spate(
    seq,
    weights: WeightMatrix,
    config: ExpectationConfig,
    eps_var: float = DEFAULT_EPS_VAR,
) -> SpateField:
    """Association field with residuals against the configured expectation."""
    x = _as_single_channel(seq)
    _check_grid(x, weights)
    values = spate_values(x, weights, config.variant, config.lengthscale, config.eps_total, eps_var)
    values.setflags(write=False)
    return SpateField(
        values=values, variant=config.variant, lengthscale=config.lengthscale, scheme=weights.scheme
    )


def concat_embedding(seq, field: SpateField) -> SpatioTemporalBatch:
    """Stack the data channel and its association field along the channel axis.

    Channel 0 carries the input data, channel 1 the field values; the result
    has shape (B, T, 2, H, W).
    """
    x = _as_single_channel(seq)
    if field.values.shape != x.shape:
        raise ShapeError(
            f"field shape {field.values.shape} does not match data shape {x.shape}"
        )
    stacked = np.stack([x, field.values], axis=2)
    return SpatioTemporalBatch(stacked)


def _embedding_variant(values_4d: np.ndarray, weights: WeightMatrix, variant: str,
                       lengthscale: float, eps_total: float) -> np.ndarray:
    """Dispatch helper shared by the trainer and the CLI: moran or expectation-based."""
    if variant == "moran":
        z = values_4d - values_4d.mean(axis=(2, 3), keepdims=True)
        return _field_from_residuals(z, weights, DEFAULT_EPS_VAR)
    return spate_values(values_4d, weights, variant, lengthscale, eps_total)
