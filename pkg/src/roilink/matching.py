"""Detection matching and the adapted precision / recall / F1.

Two regimes: the classic one-to-one greedy IoU matching, and the one-to-many
regime where a prediction counts every ground-truth box it covers by at least
the threshold fraction (intersection over ground truth). Match scores and
metric fractions are computed in exact rational arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Sequence

from .geometry import FrameDims, RectPx, intersection_area


class MatchMode(Enum):
    ONE_TO_ONE_IOU = "iou"
    ONE_TO_MANY_IOGT = "iogt"


@dataclass(frozen=True, slots=True)
class MatchConfig:
    threshold: float = 0.5
    mode: MatchMode = MatchMode.ONE_TO_MANY_IOGT

    def __post_init__(self) -> None:
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold must be in [0,1], got {self.threshold}")


@dataclass(frozen=True)
class AnnotationSet:
    """Ground-truth boxes for one frame, all within the frame bounds."""

    frame: FrameDims
    boxes: tuple[RectPx, ...] = ()

    def __post_init__(self) -> None:
        boxes = tuple(self.boxes)
        object.__setattr__(self, "boxes", boxes)
        for r in boxes:
            if not r.within(self.frame):
                raise ValueError(f"ground truth box {r} outside frame {self.frame}")


@dataclass(frozen=True)
class MatchResult:
    matched_gt: frozenset[int]
    matched_pred: frozenset[int]
    pairs: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class MetricsPoint:
    """One row of a bandwidth sweep; ratio fields are exact fractions."""

    r: float
    precision: Fraction
    recall: Fraction
    f1: Fraction
    n_pred: int
    n_gt: int
    tp_gt: int
    matched_pred: int


def _iou_frac(a: RectPx, b: RectPx) -> Fraction:
    inter = intersection_area(a, b)
    union = a.area + b.area - inter
    if union == 0:
        return Fraction(0)
    return Fraction(inter, union)


def _iogt_frac(p: RectPx, g: RectPx) -> Fraction:
    if g.area == 0:
        raise ValueError("degenerate ground truth: zero-area box")
    return Fraction(intersection_area(p, g), g.area)


def match_one_to_one(
    preds: Sequence[RectPx], gts: Sequence[RectPx], cfg: MatchConfig
) -> MatchResult:
    """Greedy max-first one-to-one matching at IoU >= threshold.

    Takes the globally maximal IoU pair among still-unmatched predictions and
    ground truths, removes both, and repeats. Score ties break by ascending
    (pred index, gt index).
    """
    threshold = Fraction(cfg.threshold)
    scores = {
        (j, k): s
        for j, p in enumerate(preds)
        for k, g in enumerate(gts)
        if (s := _iou_frac(p, g)) >= threshold
    }
    free_p = set(range(len(preds)))
    free_g = set(range(len(gts)))
    pairs: list[tuple[int, int]] = []
    while True:
        candidates = [(j, k) for (j, k) in scores if j in free_p and k in free_g]
        if not candidates:
            break
        best = max(candidates, key=lambda jk: (scores[jk], -jk[0], -jk[1]))
        pairs.append(best)
        free_p.discard(best[0])
        free_g.discard(best[1])
    pairs.sort()
    return MatchResult(
        matched_gt=frozenset(k for _, k in pairs),
        matched_pred=frozenset(j for j, _ in pairs),
        pairs=tuple(pairs),
    )


def match_iogt(
    preds: Sequence[RectPx], gts: Sequence[RectPx], cfg: MatchConfig
) -> MatchResult:
    """One-to-many matching at IoGT >= threshold.

    Boxes stay available after matching, so the iterative max-first procedure
    reduces to the closed form: every (pred, gt) pair at or above the
    threshold qualifies.
    """
    threshold = Fraction(cfg.threshold)
    pairs = tuple(
        (j, k)
        for j, p in enumerate(preds)
        for k, g in enumerate(gts)
        if _iogt_frac(p, g) >= threshold
    )
    return MatchResult(
        matched_gt=frozenset(k for _, k in pairs),
        matched_pred=frozenset(j for j, _ in pairs),
        pairs=pairs,
    )


def match(preds: Sequence[RectPx], gts: Sequence[RectPx], cfg: MatchConfig) -> MatchResult:
    if cfg.mode is MatchMode.ONE_TO_ONE_IOU:
        return match_one_to_one(preds, gts, cfg)
    return match_iogt(preds, gts, cfg)


def metrics(result: MatchResult, n_pred: int, n_gt: int, r: float = 1.0) -> MetricsPoint:
    """Adapted precision / recall / F1 from a match result.

    Zero-division conventions: recall is 1 when there is no ground truth;
    precision is 1 when there are neither predictions nor ground truth, and 0
    when there are no predictions but ground truth exists.
    """
    return metrics_from_counts(
        len(result.matched_gt), len(result.matched_pred), n_pred, n_gt, r
    )


def metrics_from_counts(
    tp_gt: int, matched_pred: int, n_pred: int, n_gt: int, r: float = 1.0
) -> MetricsPoint:
    """Same conventions as :func:`metrics`, from (possibly pooled) raw counts."""
    if tp_gt > n_gt or matched_pred > n_pred:
        raise ValueError("match result inconsistent with supplied counts")
    recall = Fraction(1) if n_gt == 0 else Fraction(tp_gt, n_gt)
    if n_pred == 0:
        precision = Fraction(1) if n_gt == 0 else Fraction(0)
    else:
        precision = Fraction(matched_pred, n_pred)
    denom = precision + recall
    f1 = Fraction(0) if denom == 0 else 2 * precision * recall / denom
    return MetricsPoint(
        r=r,
        precision=precision,
        recall=recall,
        f1=f1,
        n_pred=n_pred,
        n_gt=n_gt,
        tp_gt=tp_gt,
        matched_pred=matched_pred,
    )
