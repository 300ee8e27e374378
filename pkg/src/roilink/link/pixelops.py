"""Pixel-level operations for the link: grayscale base layer and compositing.

Grayscale is integer BT.601 luma with round-half-up, so every operation here
is bit-exact and the composited operator view can be compared pixel-for-pixel
against a naive reference.
"""

from __future__ import annotations

import numpy as np

from ..geometry import FrameDims, RectPx
from .protocol import BaseLayer, Origin, RoiTile


class CompositeError(ValueError):
    pass


def to_grayscale(frame: np.ndarray) -> np.ndarray:
    """BT.601 luma: y = (299 R + 587 G + 114 B + 500) // 1000."""
    if frame.ndim != 3 or frame.shape[2] != 3 or frame.dtype != np.uint8:
        raise ValueError(f"expected HxWx3 uint8 frame, got {frame.shape} {frame.dtype}")
    rgb = frame.astype(np.uint32)
    y = (299 * rgb[:, :, 0] + 587 * rgb[:, :, 1] + 114 * rgb[:, :, 2] + 500) // 1000
    return y.astype(np.uint8)


def base_dims(dims: FrameDims, factor: int) -> tuple[int, int]:
    """Downscaled (width, height); non-divisible dims round up (edge sample kept)."""
    return (-(-dims.width // factor), -(-dims.height // factor))


def downscale(gray: np.ndarray, factor: int) -> np.ndarray:
    """Nearest-neighbor subsample: keep the top-left pixel of each block."""
    if factor < 1:
        raise ValueError(f"downscale factor must be >= 1, got {factor}")
    return gray[::factor, ::factor]


def upscale(base: np.ndarray, factor: int, dims: FrameDims) -> np.ndarray:
    """Nearest-neighbor upscale back to full resolution: out[y, x] = base[y//f, x//f]."""
    out = np.repeat(np.repeat(base, factor, axis=0), factor, axis=1)
    return out[: dims.height, : dims.width]


def make_base_layer(frame: np.ndarray, frame_id: int, factor: int) -> BaseLayer:
    small = downscale(to_grayscale(frame), factor)
    return BaseLayer(frame_id, small.shape[1], small.shape[0], small.tobytes())


def crop_tile(frame: np.ndarray, rect: RectPx, frame_id: int, origin: Origin) -> RoiTile:
    dims = FrameDims(frame.shape[1], frame.shape[0])
    if not rect.within(dims):
        raise ValueError(f"tile rect {rect} outside frame {dims}")
    pixels = np.ascontiguousarray(frame[rect.y : rect.bottom, rect.x : rect.right])
    # tiles travel uncompressed; a codec would slot in here, but the budget
    # stays denominated in pixels either way
    return RoiTile(frame_id, rect, origin, pixels.tobytes())


def composite(base: BaseLayer, tiles: list[RoiTile] | tuple[RoiTile, ...], dims: FrameDims, factor: int) -> np.ndarray:
    """Operator view: upscaled grayscale background with full-quality tiles pasted.

    Later tiles overwrite earlier ones on overlap.
    """
    expected = base_dims(dims, factor)
    if (base.width, base.height) != expected:
        raise CompositeError(
            f"base layer is {base.width}x{base.height}, expected {expected[0]}x{expected[1]} "
            f"for {dims.width}x{dims.height} at factor {factor}"
        )
    small = np.frombuffer(base.pixels, dtype=np.uint8).reshape(base.height, base.width)
    gray = upscale(small, factor, dims)
    out = np.repeat(gray[:, :, np.newaxis], 3, axis=2)
    for tile in tiles:
        r = tile.rect
        if not r.within(dims):
            raise CompositeError(f"tile rect {r} outside frame {dims.width}x{dims.height}")
        if r.is_empty:
            continue
        patch = np.frombuffer(tile.pixels, dtype=np.uint8).reshape(r.h, r.w, 3)
        out[r.y : r.bottom, r.x : r.right] = patch
    return out
