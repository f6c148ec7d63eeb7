"""Deterministic synthetic spatio-temporal fields for tests and demos.

Three desk-scale generators with known structure (they make no attempt to
reproduce any real dataset):

* ``gen_pseudo_lgcp``     strictly positive intensity-like surfaces:
  exp of an AR(1)-in-time, box-blurred-in-space Gaussian field.
* ``gen_moving_blobs``    Gaussian bumps advected with periodic wrap;
  frame mass is conserved over time.
* ``gen_static_dynamic``  a fixed thresholded "continent" mask plus a
  travelling sinusoidal wave that averages out over one period.

Determinism contract: batch item i draws from its own SplitMix64 stream
seeded with ``seed + i``.  Draw order per item is documented on each
generator so independent implementations can reproduce outputs bit for
bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .rng import SplitMix64
from .tensor import SpatioTemporalBatch

__all__ = ["SimConfig", "gen_pseudo_lgcp", "gen_moving_blobs", "gen_static_dynamic"]

#: Bump count used by gen_moving_blobs.
BLOB_COUNT = 3


@dataclass(frozen=True)
class SimConfig:
    """Shared generator settings.

    ``radius`` is the box-blur radius in pixels for the field generators
    and doubles as the bump width (sigma) for the blob generator; ``rho``
    is the temporal AR(1) coefficient (used by the pseudo-LGCP generator
    only); ``amplitude`` scales the driving noise / bump height / wave
    height.
    """

    batch: int
    t_steps: int
    height: int
    width: int
    radius: int = 2
    rho: float = 0.8
    amplitude: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if min(self.batch, self.t_steps, self.height, self.width) < 1:
            raise ValidationError("all dims must be >= 1")
        if not (0.0 <= self.rho < 1.0):
            raise ValidationError(f"rho must be in [0, 1), got {self.rho}")
        if self.radius < 0:
            raise ValidationError(f"radius must be >= 0, got {self.radius}")
        if not math.isfinite(self.amplitude):
            raise ValidationError("amplitude must be finite")


def _box_blur_periodic(field: np.ndarray, radius: int) -> np.ndarray:
    """Normalised box filter with periodic wrap, separable by axis."""
    if radius == 0:
        return field
    out = field
    for axis in (0, 1):
        acc = np.zeros_like(out)
        for shift in range(-radius, radius + 1):
            acc += np.roll(out, shift, axis=axis)
        out = acc / (2 * radius + 1)
    return out


def _item_stream(cfg: SimConfig, item: int) -> SplitMix64:
    return SplitMix64(cfg.seed + item)


def gen_pseudo_lgcp(cfg: SimConfig) -> SpatioTemporalBatch:
    """Positive surfaces exp(G) with AR(1) temporal and blurred spatial structure.

    Per item: one block of T*H*W normals is drawn frame-major and scaled
    by ``amplitude``.  With e_t = blur(noise_t),

        G_0 = e_0,   G_t = rho * G_{t-1} + sqrt(1 - rho^2) * e_t
    """
    out = np.empty((cfg.batch, cfg.t_steps, cfg.height, cfg.width), dtype=np.float64)
    innovation = math.sqrt(1.0 - cfg.rho * cfg.rho)
    for item in range(cfg.batch):
        stream = _item_stream(cfg, item)
        noise = cfg.amplitude * stream.normal_block(
            cfg.t_steps * cfg.height * cfg.width
        ).reshape(cfg.t_steps, cfg.height, cfg.width)
        g = _box_blur_periodic(noise[0], cfg.radius)
        out[item, 0] = g
        for t in range(1, cfg.t_steps):
            g = cfg.rho * g + innovation * _box_blur_periodic(noise[t], cfg.radius)
            out[item, t] = g
    return SpatioTemporalBatch.from_frames(np.exp(out))


def gen_moving_blobs(
    cfg: SimConfig, velocity: tuple[float, float] = (0.0, 1.0)
) -> SpatioTemporalBatch:
    """Gaussian bumps drifting by ``velocity`` (dy, dx) per step, wrapping.

    Per item: BLOB_COUNT centre coordinates are drawn as uniform pairs in
    row-then-column order (y_k = u * H, x_k = u * W).  Bump width is
    ``sigma = radius`` (or 1 when radius is 0) and distances use the
    nearest periodic image, so integer-velocity advection is an exact
    cyclic shift and frame sums stay constant.
    """
    sigma = float(cfg.radius) if cfg.radius > 0 else 1.0
    rows = np.arange(cfg.height, dtype=np.float64)
    cols = np.arange(cfg.width, dtype=np.float64)
    out = np.zeros((cfg.batch, cfg.t_steps, cfg.height, cfg.width), dtype=np.float64)
    for item in range(cfg.batch):
        stream = _item_stream(cfg, item)
        centers = [
            (stream.next_float() * cfg.height, stream.next_float() * cfg.width)
            for _ in range(BLOB_COUNT)
        ]
        for t in range(cfg.t_steps):
            frame = np.zeros((cfg.height, cfg.width), dtype=np.float64)
            for cy, cx in centers:
                py = cy + t * velocity[0]
                px = cx + t * velocity[1]
                dy = (rows - py + cfg.height / 2.0) % cfg.height - cfg.height / 2.0
                dx = (cols - px + cfg.width / 2.0) % cfg.width - cfg.width / 2.0
                d2 = dy[:, None] ** 2 + dx[None, :] ** 2
                frame += cfg.amplitude * np.exp(-d2 / (2.0 * sigma * sigma))
            out[item, t] = frame
    return SpatioTemporalBatch.from_frames(out)


def gen_static_dynamic(cfg: SimConfig) -> SpatioTemporalBatch:
    """Static thresholded mask plus a travelling sinusoid along the x axis.

    Per item: one block of H*W normals is drawn, blurred, and thresholded
    at zero into a binary mask.  Frame t adds
    ``amplitude * sin(2*pi*(x/W + t/T))``; over the t = 0..T-1 period the
    wave averages to zero, leaving exactly the mask.
    """
    cols = np.arange(cfg.width, dtype=np.float64)
    out = np.empty((cfg.batch, cfg.t_steps, cfg.height, cfg.width), dtype=np.float64)
    for item in range(cfg.batch):
        stream = _item_stream(cfg, item)
        rough = stream.normal_block(cfg.height * cfg.width).reshape(cfg.height, cfg.width)
        mask = (_box_blur_periodic(rough, cfg.radius) > 0.0).astype(np.float64)
        for t in range(cfg.t_steps):
            phase = 2.0 * math.pi * (cols / cfg.width + t / cfg.t_steps)
            out[item, t] = mask + cfg.amplitude * np.sin(phase)[None, :]
    return SpatioTemporalBatch.from_frames(out)
