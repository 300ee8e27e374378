"""Bandwidth-budgeted RoI selection.

Applies the streamable portion ``r`` to a proposal set, producing the list of
rects transmitted in full quality. Two policies: area-greedy subset selection
for unscored proposals, and strict confidence-descending prefix for scored
detections. Either way the last, partially-fitting box is shrunk concentrically
into the leftover budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, Sequence

from .geometry import FrameDims, RectPx, concentric_fit, union_area


class SelectionError(ValueError):
    """Invalid selection input (bad budget, unscored boxes under a scored policy)."""


class SelectionMode(Enum):
    AREA_GREEDY = "area"
    CONFIDENCE_PREFIX = "confidence"


class Accounting(Enum):
    UNION_PIXELS = "union"
    SUM_OF_CROP_AREAS = "sum"


@dataclass(frozen=True, slots=True)
class ScoredBox:
    """A proposal rect with an optional confidence in [0, 1]."""

    rect: RectPx
    confidence: float | None = None

    def __post_init__(self) -> None:
        if self.confidence is not None and not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0,1], got {self.confidence}")


@dataclass(frozen=True, slots=True)
class SelectionPolicy:
    mode: SelectionMode
    accounting: Accounting = Accounting.UNION_PIXELS
    exact_small_n: int | None = None

    def __post_init__(self) -> None:
        if self.exact_small_n is not None and not 0 <= self.exact_small_n <= 20:
            raise ValueError(f"exact_small_n must be in [0,20], got {self.exact_small_n}")


@dataclass(frozen=True)
class ProposalSet:
    """Prediction boxes for a single frame, all within the frame bounds."""

    frame: FrameDims
    boxes: tuple[ScoredBox, ...] = field(default=())

    def __post_init__(self) -> None:
        boxes = tuple(self.boxes)
        object.__setattr__(self, "boxes", boxes)
        for b in boxes:
            if not b.rect.within(self.frame):
                raise ValueError(f"box {b.rect} outside frame {self.frame}")


def pixel_budget(r: float, frame: FrameDims) -> int:
    """Quantize the portion r to a pixel budget: floor(r * width * height)."""
    if not 0.0 <= r <= 1.0:
        raise SelectionError(f"budget portion must be in [0,1], got {r}")
    return math.floor(Fraction(r) * frame.area)


def _accounted(rects: Sequence[RectPx], accounting: Accounting, base: Sequence[RectPx]) -> int:
    if accounting is Accounting.SUM_OF_CROP_AREAS:
        return sum(r.area for r in base) + sum(r.area for r in rects)
    return union_area(list(base) + list(rects))


def _canonical(boxes: Iterable[ScoredBox], mode: SelectionMode) -> list[ScoredBox]:
    """Deterministic scan order; area/confidence ties break by (y, x, w, h)."""
    if mode is SelectionMode.AREA_GREEDY:
        key = lambda b: (-b.rect.area, b.rect.y, b.rect.x, b.rect.w, b.rect.h)
    else:
        key = lambda b: (-b.confidence, b.rect.y, b.rect.x, b.rect.w, b.rect.h)
    return sorted(boxes, key=key)


def select_pixels(
    proposals: ProposalSet,
    budget_px: int,
    policy: SelectionPolicy,
    base_rects: Sequence[RectPx] = (),
) -> list[RectPx]:
    """Select against an explicit pixel budget shared with ``base_rects``.

    ``base_rects`` are already-committed rects (operator tiles) that count
    toward the budget under the configured accounting but are not returned.
    """
    if budget_px < 0:
        raise SelectionError(f"pixel budget must be >= 0, got {budget_px}")
    if policy.mode is SelectionMode.CONFIDENCE_PREFIX:
        unscored = [b for b in proposals.boxes if b.confidence is None]
        if unscored:
            raise SelectionError(
                f"confidence policy requires scored boxes; {len(unscored)} unscored"
            )
    boxes = _canonical((b for b in proposals.boxes if not b.rect.is_empty), policy.mode)
    acct = policy.accounting

    if policy.mode is SelectionMode.CONFIDENCE_PREFIX:
        return _select_prefix(boxes, budget_px, acct, base_rects)
    if policy.exact_small_n is not None and len(boxes) <= policy.exact_small_n:
        return _select_exhaustive(boxes, budget_px, acct, base_rects)
    return _select_greedy(boxes, budget_px, acct, base_rects)


def _shrink_step(
    src: RectPx, selected: list[RectPx], budget_px: int, acct: Accounting, base: Sequence[RectPx]
) -> list[RectPx]:
    remaining = budget_px - _accounted(selected, acct, base)
    fit = concentric_fit(src, remaining)
    if not fit.is_empty:
        selected.append(fit)
    return selected


def _select_greedy(
    boxes: list[ScoredBox], budget_px: int, acct: Accounting, base: Sequence[RectPx]
) -> list[RectPx]:
    selected: list[RectPx] = []
    skipped: list[RectPx] = []
    for b in boxes:
        if _accounted(selected + [b.rect], acct, base) <= budget_px:
            selected.append(b.rect)
        else:
            skipped.append(b.rect)
    if skipped:
        # largest remaining box, shrunk into the leftover budget
        return _shrink_step(skipped[0], selected, budget_px, acct, base)
    return selected


def _select_exhaustive(
    boxes: list[ScoredBox], budget_px: int, acct: Accounting, base: Sequence[RectPx]
) -> list[RectPx]:
    rects = [b.rect for b in boxes]
    best_mask, best_area = 0, -1
    for mask in range(1 << len(rects)):
        subset = [rects[i] for i in range(len(rects)) if mask >> i & 1]
        a = _accounted(subset, acct, base)
        if a <= budget_px and a > best_area:
            best_mask, best_area = mask, a
    selected = [rects[i] for i in range(len(rects)) if best_mask >> i & 1]
    skipped = [rects[i] for i in range(len(rects)) if not best_mask >> i & 1]
    if skipped:
        return _shrink_step(skipped[0], selected, budget_px, acct, base)
    return selected


def _select_prefix(
    boxes: list[ScoredBox], budget_px: int, acct: Accounting, base: Sequence[RectPx]
) -> list[RectPx]:
    selected: list[RectPx] = []
    for b in boxes:
        if _accounted(selected + [b.rect], acct, base) <= budget_px:
            selected.append(b.rect)
        else:
            # strict prefix: shrink the first non-fitting box, drop the rest
            return _shrink_step(b.rect, selected, budget_px, acct, base)
    return selected


def select(proposals: ProposalSet, r: float, policy: SelectionPolicy) -> list[RectPx]:
    """Select the transmitted RoI list for budget portion ``r``.

    Returns full-quality rects in scan order, with at most one concentrically
    shrunk box appended.
    """
    return select_pixels(proposals, pixel_budget(r, proposals.frame), policy)
