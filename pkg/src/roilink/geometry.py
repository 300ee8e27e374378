"""Integer-pixel rectangle arithmetic: the numeric foundation for every stage.

All rectangles are axis-aligned with non-negative integer dimensions and
cover exactly ``w * h`` pixels. Every ratio computed here is a ratio of pixel
counts, so results are bit-exact and can be checked against rasterization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True, slots=True)
class FrameDims:
    """Width and height of a frame in pixels."""

    width: int
    height: int

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError(f"frame dims must be >= 1, got {self.width}x{self.height}")

    @property
    def area(self) -> int:
        return self.width * self.height


@dataclass(frozen=True, slots=True)
class RectPx:
    """Axis-aligned pixel rectangle: left, top, width, height.

    A rect with ``w == 0`` or ``h == 0`` is empty. Empty rects produced by
    this module are normalized to ``RectPx(0, 0, 0, 0)`` so they compare equal.
    """

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self) -> None:
        if self.w < 0 or self.h < 0:
            raise ValueError(f"rect dims must be >= 0, got w={self.w} h={self.h}")

    @classmethod
    def empty(cls) -> RectPx:
        return cls(0, 0, 0, 0)

    @property
    def area(self) -> int:
        return self.w * self.h

    @property
    def is_empty(self) -> bool:
        return self.w == 0 or self.h == 0

    @property
    def right(self) -> int:
        return self.x + self.w

    @property
    def bottom(self) -> int:
        return self.y + self.h

    def contains(self, other: RectPx) -> bool:
        """True when ``other`` lies fully inside this rect (empty rects always fit)."""
        if other.is_empty:
            return True
        return (
            self.x <= other.x
            and self.y <= other.y
            and other.right <= self.right
            and other.bottom <= self.bottom
        )

    def within(self, dims: FrameDims) -> bool:
        return 0 <= self.x and 0 <= self.y and self.right <= dims.width and self.bottom <= dims.height

    def clamped(self, dims: FrameDims) -> RectPx:
        """Clip to the frame; returns the normalized empty rect when nothing remains."""
        x0 = min(max(self.x, 0), dims.width)
        y0 = min(max(self.y, 0), dims.height)
        x1 = min(max(self.right, x0), dims.width)
        y1 = min(max(self.bottom, y0), dims.height)
        if x1 - x0 == 0 or y1 - y0 == 0:
            return RectPx.empty()
        return RectPx(x0, y0, x1 - x0, y1 - y0)


def intersect(a: RectPx, b: RectPx) -> RectPx:
    """Maximal rect contained in both; the normalized empty rect when disjoint."""
    x0 = max(a.x, b.x)
    y0 = max(a.y, b.y)
    x1 = min(a.right, b.right)
    y1 = min(a.bottom, b.bottom)
    if x1 - x0 <= 0 or y1 - y0 <= 0:
        return RectPx.empty()
    return RectPx(x0, y0, x1 - x0, y1 - y0)


def intersection_area(a: RectPx, b: RectPx) -> int:
    return intersect(a, b).area


def iou(a: RectPx, b: RectPx) -> float:
    """Intersection over union of pixel counts; 0.0 when both rects are empty."""
    inter = intersection_area(a, b)
    union = a.area + b.area - inter
    if union == 0:
        return 0.0
    return inter / union


def iogt(p: RectPx, g: RectPx) -> float:
    """Intersection over ground truth: covered fraction of ``g``'s pixels.

    Raises:
        ValueError: if ``g`` has zero area (degenerate ground truth).
    """
    if g.area == 0:
        raise ValueError("degenerate ground truth: zero-area box")
    return intersection_area(p, g) / g.area


def union_area(boxes: list[RectPx] | tuple[RectPx, ...]) -> int:
    """Exact pixel area of the union, via coordinate-compression sweep."""
    rects = [b for b in boxes if not b.is_empty]
    if not rects:
        return 0
    if len(rects) == 1:
        return rects[0].area
    xs = sorted({r.x for r in rects} | {r.right for r in rects})
    ys = sorted({r.y for r in rects} | {r.bottom for r in rects})
    total = 0
    for j in range(len(ys) - 1):
        y0, y1 = ys[j], ys[j + 1]
        row = [r for r in rects if r.y <= y0 and y1 <= r.bottom]
        if not row:
            continue
        for i in range(len(xs) - 1):
            x0, x1 = xs[i], xs[i + 1]
            if any(r.x <= x0 and x1 <= r.right for r in row):
                total += (x1 - x0) * (y1 - y0)
    return total


def concentric_fit(src: RectPx, max_area: int) -> RectPx:
    """Largest same-center, same-aspect rect inside ``src`` with area <= max_area.

    Dims are the ideal scale ``sqrt(max_area / area(src))`` applied to each
    axis and floored, computed in exact integer arithmetic:
    ``floor(w * s) == isqrt(max_area * w // h)``. Stepping both dims up by one
    always violates the area budget. When the center parities differ, the
    result is biased toward the top-left by at most one pixel.

    Returns ``src`` unchanged when the budget covers it, and the empty rect
    when the maximal fit collapses to zero width or height.
    """
    if max_area < 0:
        raise ValueError(f"max_area must be >= 0, got {max_area}")
    if src.is_empty:
        return RectPx.empty()
    if max_area >= src.area:
        return src
    w = math.isqrt(max_area * src.w // src.h)
    h = math.isqrt(max_area * src.h // src.w)
    if w == 0 or h == 0:
        return RectPx.empty()
    return RectPx(src.x + (src.w - w) // 2, src.y + (src.h - h) // 2, w, h)
