"""Gridded sequence batches and their on-disk formats.

A batch is a float64 array of shape (B, T, C, H, W): B independent items,
T time steps, C channels, H x W pixel grid.  All values must be finite and
every dimension at least 1.

Binary container (.stgk), all integers little-endian:

    offset  size  field
    0       4     magic "STGK"
    4       1     format version, currently 1
    5       1     dtype code, 0 = float64 little-endian
    6       2     reserved, must be zero
    8       20    five uint32 dims: B, T, C, H, W
    28      8*B*T*C*H*W   payload, C-order

Round-trips are byte-exact: write(read(f)) reproduces f bit for bit.

CSV form: one frame row per line (W comma-separated decimals, 17
significant digits, so float64 values survive the round-trip), B*T*C*H
lines in C-order.  Dims are supplied out of band.

PGM form: binary P5, maxval 255, one frame scaled so the frame minimum
maps to 0 and the maximum to 255 (ties rounded half to even); a constant
frame maps to mid-grey 128.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, PayloadLengthError, ShapeError, ValidationError

__all__ = [
    "SpatioTemporalBatch",
    "read_stgk",
    "write_stgk",
    "read_csv_frames",
    "write_csv_frames",
    "render_pgm",
    "write_pgm",
]

_MAGIC = b"STGK"
_VERSION = 1
_DTYPE_F64 = 0
_HEADER = struct.Struct("<4sBBH5I")


def _validate_values(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 5:
        raise ShapeError(f"expected a (B, T, C, H, W) array, got shape {values.shape}")
    if any(d < 1 for d in values.shape):
        raise ValidationError(f"all dims must be >= 1, got {values.shape}")
    if not np.all(np.isfinite(values)):
        raise ValidationError("batch contains non-finite values")
    return values


@dataclass(frozen=True)
class SpatioTemporalBatch:
    """Immutable (B, T, C, H, W) float64 batch."""

    values: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(_validate_values(self.values))
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def dims(self) -> tuple[int, int, int, int, int]:
        return tuple(self.values.shape)  # type: ignore[return-value]

    @classmethod
    def from_frames(cls, frames: np.ndarray) -> "SpatioTemporalBatch":
        """Wrap a (B, T, H, W) array as a single-channel batch."""
        frames = np.asarray(frames, dtype=np.float64)
        if frames.ndim != 4:
            raise ShapeError(f"expected (B, T, H, W), got shape {frames.shape}")
        return cls(frames[:, :, None, :, :])

    def channel(self, c: int) -> np.ndarray:
        """(B, T, H, W) view of one channel."""
        if not 0 <= c < self.values.shape[2]:
            raise ValidationError(f"channel {c} out of range for C={self.values.shape[2]}")
        return self.values[:, :, c, :, :]


def write_stgk(batch: SpatioTemporalBatch, path) -> None:
    b, t, c, h, w = batch.dims
    header = _HEADER.pack(_MAGIC, _VERSION, _DTYPE_F64, 0, b, t, c, h, w)
    payload = np.ascontiguousarray(batch.values, dtype="<f8").tobytes(order="C")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_stgk(path) -> SpatioTemporalBatch:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise FormatError(f"file too short for header: {len(raw)} bytes")
    magic, version, dtype, reserved, b, t, c, h, w = _HEADER.unpack_from(raw, 0)
    if magic != _MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {_MAGIC!r}")
    if version != _VERSION:
        raise FormatError(f"unsupported version {version}")
    if dtype != _DTYPE_F64:
        raise FormatError(f"unsupported dtype code {dtype}")
    if reserved != 0:
        raise FormatError("reserved header bytes must be zero")
    if min(b, t, c, h, w) < 1:
        raise ValidationError(f"all dims must be >= 1, got {(b, t, c, h, w)}")
    expected = 8 * b * t * c * h * w
    payload = raw[_HEADER.size :]
    if len(payload) != expected:
        raise PayloadLengthError(
            f"payload is {len(payload)} bytes, header declares {expected}"
        )
    values = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(b, t, c, h, w)
    return SpatioTemporalBatch(values)


def write_csv_frames(batch: SpatioTemporalBatch, path) -> None:
    b, t, c, h, w = batch.dims
    rows = batch.values.reshape(b * t * c * h, w)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for row in rows:
            fh.write(",".join(f"{v:.17g}" for v in row))
            fh.write("\n")


def read_csv_frames(path, dims: tuple[int, int, int, int, int]) -> SpatioTemporalBatch:
    b, t, c, h, w = (int(d) for d in dims)
    if min(b, t, c, h, w) < 1:
        raise ValidationError(f"all dims must be >= 1, got {dims}")
    values = np.empty((b * t * c * h, w), dtype=np.float64)
    with open(path, "r", encoding="ascii") as fh:
        lines = [line for line in (raw.strip() for raw in fh) if line]
    if len(lines) != b * t * c * h:
        raise ShapeError(f"expected {b * t * c * h} frame rows, found {len(lines)}")
    for i, line in enumerate(lines):
        parts = line.split(",")
        if len(parts) != w:
            raise ShapeError(f"line {i + 1}: expected {w} values, found {len(parts)}")
        try:
            values[i] = [float(p) for p in parts]
        except ValueError as exc:
            raise FormatError(f"line {i + 1}: {exc}") from exc
    return SpatioTemporalBatch(values.reshape(b, t, c, h, w))


def _frame_to_bytes(frame: np.ndarray) -> np.ndarray:
    """Scale a 2-D frame to uint8: min -> 0, max -> 255, constant -> 128."""
    lo = float(frame.min())
    hi = float(frame.max())
    if hi == lo:
        return np.full(frame.shape, 128, dtype=np.uint8)
    scaled = np.rint(255.0 * (frame - lo) / (hi - lo))
    return scaled.astype(np.uint8)


def write_pgm(image: np.ndarray, path) -> None:
    """Write a 2-D float array as a binary P5 PGM after min/max scaling."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ShapeError(f"expected a 2-D image, got shape {image.shape}")
    if not np.all(np.isfinite(image)):
        raise ValidationError("image contains non-finite values")
    h, w = image.shape
    data = _frame_to_bytes(image)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(data.tobytes(order="C"))


def render_pgm(batch: SpatioTemporalBatch, b: int, t: int, c: int, path) -> None:
    """Render one frame of the batch to an 8-bit PGM file."""
    nb, nt, nc, _, _ = batch.dims
    if not (0 <= b < nb and 0 <= t < nt and 0 <= c < nc):
        raise ValidationError(f"frame index ({b}, {t}, {c}) out of range for dims {batch.dims}")
    write_pgm(batch.values[b, t, c], path)
