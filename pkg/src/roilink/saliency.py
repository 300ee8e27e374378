"""Saliency-map post-processing: binarize, label components, fit tight boxes.

Turns a per-pixel attention heatmap into class-agnostic RoI proposals. The
heatmap itself (model forward pass, gradient attribution) is an input, not
computed here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .geometry import FrameDims, RectPx
from .selection import ProposalSet, ScoredBox

_STRUCTURES = {
    4: np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool),
    8: np.ones((3, 3), dtype=bool),
}


@dataclass(frozen=True)
class Heatmap:
    """Float raster with one value in [0, 1] per pixel, row-major."""

    dims: FrameDims
    values: np.ndarray

    def __post_init__(self) -> None:
        if self.values.shape != (self.dims.height, self.dims.width):
            raise ValueError(
                f"heatmap shape {self.values.shape} does not match dims {self.dims}"
            )
        if self.values.size and (self.values.min() < 0.0 or self.values.max() > 1.0):
            raise ValueError("heatmap values must lie in [0,1]")

    @classmethod
    def from_array(cls, values: np.ndarray) -> Heatmap:
        arr = np.asarray(values, dtype=np.float32)
        return cls(FrameDims(arr.shape[1], arr.shape[0]), arr)


@dataclass(frozen=True)
class BinaryMap:
    """0/1 raster, row-major."""

    dims: FrameDims
    bits: np.ndarray

    def __post_init__(self) -> None:
        if self.bits.shape != (self.dims.height, self.dims.width):
            raise ValueError(f"binary map shape {self.bits.shape} does not match dims {self.dims}")

    @classmethod
    def from_array(cls, bits: np.ndarray) -> BinaryMap:
        arr = (np.asarray(bits) != 0).astype(np.uint8)
        return cls(FrameDims(arr.shape[1], arr.shape[0]), arr)


def binarize(heatmap: Heatmap, threshold: float = 0.5) -> BinaryMap:
    """Round each pixel to 0 or 1: bit = 1 iff value >= threshold."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must be in [0,1], got {threshold}")
    return BinaryMap(heatmap.dims, (heatmap.values >= threshold).astype(np.uint8))


def component_boxes(
    binary: BinaryMap, connectivity: int = 8, min_area: int = 0
) -> list[RectPx]:
    """Tight bounding box around each connected component of 1-pixels.

    Components smaller than ``min_area`` pixels are dropped. Output is sorted
    by box area descending, ties by (y, x) ascending.
    """
    if connectivity not in _STRUCTURES:
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    labels, n = ndimage.label(binary.bits, structure=_STRUCTURES[connectivity])
    if n == 0:
        return []
    slices = ndimage.find_objects(labels)
    boxes = []
    if min_area > 0:
        counts = np.bincount(labels.ravel(), minlength=n + 1)
    for i, (sy, sx) in enumerate(slices):
        if min_area > 0 and counts[i + 1] < min_area:
            continue
        boxes.append(RectPx(sx.start, sy.start, sx.stop - sx.start, sy.stop - sy.start))
    boxes.sort(key=lambda r: (-r.area, r.y, r.x, r.w, r.h))
    return boxes


def propose_from_heatmap(
    heatmap: Heatmap, threshold: float = 0.5, connectivity: int = 8, min_area: int = 0
) -> ProposalSet:
    """binarize + component_boxes; resulting proposals carry no confidence."""
    boxes = component_boxes(binarize(heatmap, threshold), connectivity, min_area)
    return ProposalSet(heatmap.dims, tuple(ScoredBox(r) for r in boxes))
