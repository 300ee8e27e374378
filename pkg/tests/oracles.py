"""Brute-force reference implementations used to pin expected values.

Everything here is deliberately naive (per-pixel rasterization, flood fill,
subset enumeration) and independent of the library code paths it checks.
"""

from __future__ import annotations

from collections import deque
from itertools import combinations

import numpy as np

from roilink.geometry import RectPx


def rasterize(rects, width: int, height: int) -> np.ndarray:
    """Boolean coverage mask for a list of rects inside a width x height frame."""
    mask = np.zeros((height, width), dtype=bool)
    for r in rects:
        x0, y0 = max(r.x, 0), max(r.y, 0)
        x1, y1 = min(r.right, width), min(r.bottom, height)
        if x1 > x0 and y1 > y0:
            mask[y0:y1, x0:x1] = True
    return mask


def raster_union_area(rects, width: int, height: int) -> int:
    return int(rasterize(rects, width, height).sum())


def raster_intersection_area(a: RectPx, b: RectPx, width: int, height: int) -> int:
    ma = rasterize([a], width, height)
    mb = rasterize([b], width, height)
    return int((ma & mb).sum())


def raster_iou(a: RectPx, b: RectPx, width: int, height: int) -> float:
    ma = rasterize([a], width, height)
    mb = rasterize([b], width, height)
    union = int((ma | mb).sum())
    if union == 0:
        return 0.0
    return int((ma & mb).sum()) / union


def raster_iogt(p: RectPx, g: RectPx, width: int, height: int) -> float:
    mp = rasterize([p], width, height)
    mg = rasterize([g], width, height)
    return int((mp & mg).sum()) / int(mg.sum())


def flood_fill_boxes(bits: np.ndarray, connectivity: int = 8) -> list[RectPx]:
    """Tight box per connected component via BFS flood fill.

    Returned in the library's canonical order: area descending, ties by
    (y, x, w, h) ascending.
    """
    height, width = bits.shape
    seen = np.zeros_like(bits, dtype=bool)
    if connectivity == 8:
        steps = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]
    else:
        steps = [(-1, 0), (0, -1), (0, 1), (1, 0)]
    boxes = []
    for sy in range(height):
        for sx in range(width):
            if not bits[sy, sx] or seen[sy, sx]:
                continue
            queue = deque([(sy, sx)])
            seen[sy, sx] = True
            min_x = max_x = sx
            min_y = max_y = sy
            while queue:
                cy, cx = queue.popleft()
                min_x, max_x = min(min_x, cx), max(max_x, cx)
                min_y, max_y = min(min_y, cy), max(max_y, cy)
                for dy, dx in steps:
                    ny, nx = cy + dy, cx + dx
                    if 0 <= ny < height and 0 <= nx < width and bits[ny, nx] and not seen[ny, nx]:
                        seen[ny, nx] = True
                        queue.append((ny, nx))
            boxes.append(RectPx(min_x, min_y, max_x - min_x + 1, max_y - min_y + 1))
    boxes.sort(key=lambda r: (-r.area, r.y, r.x, r.w, r.h))
    return boxes


def best_subset_area(rects, budget: int, accounted) -> int:
    """Max accounted area over all subsets with accounted(subset) <= budget."""
    best = 0
    for n in range(len(rects) + 1):
        for subset in combinations(rects, n):
            a = accounted(list(subset))
            if a <= budget and a > best:
                best = a
    return best


def reference_grayscale(frame: np.ndarray) -> np.ndarray:
    """Per-pixel integer BT.601 luma with round-half-up."""
    h, w, _ = frame.shape
    out = np.zeros((h, w), dtype=np.uint8)
    for y in range(h):
        for x in range(w):
            r, g, b = (int(v) for v in frame[y, x])
            out[y, x] = (299 * r + 587 * g + 114 * b + 500) // 1000
    return out


def reference_composite(base_pixels, base_w, base_h, factor, tiles, width, height):
    """Per-pixel reference: tile pixel if covered (later tiles win), else
    nearest-neighbor upscaled grayscale base."""
    base = np.frombuffer(base_pixels, dtype=np.uint8).reshape(base_h, base_w)
    out = np.zeros((height, width, 3), dtype=np.uint8)
    patches = [
        (t.rect, np.frombuffer(t.pixels, dtype=np.uint8).reshape(t.rect.h, t.rect.w, 3))
        for t in tiles
    ]
    for y in range(height):
        for x in range(width):
            value = None
            for rect, patch in patches:  # keep scanning: later tiles overwrite
                if rect.x <= x < rect.right and rect.y <= y < rect.bottom:
                    value = patch[y - rect.y, x - rect.x]
            out[y, x] = value if value is not None else base[y // factor, x // factor]
    return out
