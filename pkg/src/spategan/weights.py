"""Binary spatial weights on a regular pixel grid.

Pixels are indexed row-major: pixel (r, c) has flat index r * width + c.
Two schemes are supported, neither wraps around the grid edges:

* ``rook``:  the 4 orthogonal neighbours
* ``queen``: the 8 orthogonal + diagonal neighbours (default elsewhere)

Weights are binary and symmetric with an empty diagonal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGridError, ValidationError

__all__ = ["WeightScheme", "WeightMatrix", "build_grid_weights"]

WeightScheme = str

_OFFSETS = {
    "rook": ((-1, 0), (1, 0), (0, -1), (0, 1)),
    "queen": ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)),
}


@dataclass(frozen=True)
class WeightMatrix:
    """Neighbour structure of a height x width grid under one scheme.

    ``neighbors[i]`` lists the flat indices adjacent to pixel i in
    ascending order; ``counts[i]`` is its neighbour count n_i.
    """

    height: int
    width: int
    scheme: WeightScheme
    neighbors: tuple[tuple[int, ...], ...]
    counts: np.ndarray = field(repr=False)
    # Padded neighbour table for vectorised gather-sums: rows index pixels,
    # unused slots point at pixel 0 with weight 0.
    pad_index: np.ndarray = field(repr=False)
    pad_weight: np.ndarray = field(repr=False)

    @property
    def n_pixels(self) -> int:
        return self.height * self.width

    def neighbor_sums(self, flat_fields: np.ndarray) -> np.ndarray:
        """Sum each pixel's neighbours for fields of shape (..., n_pixels)."""
        flat_fields = np.asarray(flat_fields, dtype=np.float64)
        if flat_fields.shape[-1] != self.n_pixels:
            raise ValidationError(
                f"fields have {flat_fields.shape[-1]} pixels, grid has {self.n_pixels}"
            )
        gathered = np.take(flat_fields, self.pad_index, axis=-1)
        return np.einsum("...nk,nk->...n", gathered, self.pad_weight)


def build_grid_weights(height: int, width: int, scheme: WeightScheme = "queen") -> WeightMatrix:
    """Construct binary grid weights; the grid needs at least two pixels."""
    if scheme not in _OFFSETS:
        raise ValidationError(f"unknown weight scheme {scheme!r}; use 'rook' or 'queen'")
    if height < 1 or width < 1:
        raise ValidationError(f"grid dims must be >= 1, got {height}x{width}")
    if height * width < 2:
        raise DegenerateGridError("a 1x1 grid has no neighbour structure")

    offsets = _OFFSETS[scheme]
    neighbors: list[tuple[int, ...]] = []
    for r in range(height):
        for c in range(width):
            around = [
                (r + dr) * width + (c + dc)
                for dr, dc in offsets
                if 0 <= r + dr < height and 0 <= c + dc < width
            ]
            neighbors.append(tuple(sorted(around)))

    n = height * width
    counts = np.array([len(nb) for nb in neighbors], dtype=np.int64)
    max_nb = int(counts.max())
    pad_index = np.zeros((n, max_nb), dtype=np.int64)
    pad_weight = np.zeros((n, max_nb), dtype=np.float64)
    for i, nb in enumerate(neighbors):
        pad_index[i, : len(nb)] = nb
        pad_weight[i, : len(nb)] = 1.0
    counts.setflags(write=False)
    pad_index.setflags(write=False)
    pad_weight.setflags(write=False)
    return WeightMatrix(
        height=height,
        width=width,
        scheme=scheme,
        neighbors=tuple(neighbors),
        counts=counts,
        pad_index=pad_index,
        pad_weight=pad_weight,
    )
