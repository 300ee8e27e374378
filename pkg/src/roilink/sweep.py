"""Bandwidth sweep harness and the stage throughput benchmark.

The sweep reproduces the evaluation protocol: for each budget portion r on a
(log-spaced) grid, truncate every image's proposals with the selection policy,
match against ground truth, and aggregate precision / recall / F1 into one
CSV row per grid point.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .dataset import Dataset
from .geometry import FrameDims
from .matching import MatchConfig, MetricsPoint, match, metrics, metrics_from_counts
from .saliency import Heatmap, binarize, component_boxes
from .selection import Accounting, SelectionMode, SelectionPolicy, select
from .link.pixelops import to_grayscale
from .link.sources import synthetic_scene


class SweepError(ValueError):
    pass


def default_r_grid(points: int = 50, lo: float = 1e-3, hi: float = 1.0) -> tuple[float, ...]:
    """r = 0 plus ``points`` log-spaced values from lo to hi."""
    grid = [0.0] + [float(v) for v in np.logspace(math.log10(lo), math.log10(hi), points)]
    return tuple(sorted(set(grid)))


@dataclass(frozen=True)
class SweepConfig:
    r_grid: tuple[float, ...] = field(default_factory=default_r_grid)
    policy: SelectionPolicy = SelectionPolicy(SelectionMode.AREA_GREEDY, Accounting.UNION_PIXELS)
    match: MatchConfig = MatchConfig()
    aggregation: str = "micro"

    def __post_init__(self) -> None:
        grid = tuple(self.r_grid)
        object.__setattr__(self, "r_grid", grid)
        if list(grid) != sorted(grid):
            raise SweepError("r grid must be sorted ascending")
        if grid and (grid[0] < 0.0 or grid[-1] > 1.0):
            raise SweepError("r grid values must lie in [0,1]")
        if self.aggregation not in ("micro", "macro"):
            raise SweepError(f"aggregation must be micro or macro, got {self.aggregation!r}")


def sweep(dataset: Dataset, cfg: SweepConfig) -> list[MetricsPoint]:
    """One MetricsPoint per grid value.

    Micro aggregation pools matched / total counts across all images before
    dividing; macro averages the per-image ratios.
    """
    if dataset.detections is None:
        raise SweepError("dataset has no detections; provide a detections file")
    missing = sorted(set(dataset.annotations) - set(dataset.detections))
    if missing:
        raise SweepError(f"images without proposals: {missing}")

    images = [
        (dataset.annotations[img_id], dataset.detections[img_id])
        for img_id in sorted(dataset.annotations)
    ]
    points = []
    for r in cfg.r_grid:
        if cfg.aggregation == "micro":
            tp_gt = matched_pred = n_pred = n_gt = 0
            for gts, props in images:
                selected = select(props, r, cfg.policy)
                result = match(selected, list(gts.boxes), cfg.match)
                tp_gt += len(result.matched_gt)
                matched_pred += len(result.matched_pred)
                n_pred += len(selected)
                n_gt += len(gts.boxes)
            points.append(metrics_from_counts(tp_gt, matched_pred, n_pred, n_gt, r))
        else:
            per_image = []
            tp_gt = matched_pred = n_pred = n_gt = 0
            for gts, props in images:
                selected = select(props, r, cfg.policy)
                result = match(selected, list(gts.boxes), cfg.match)
                m = metrics(result, len(selected), len(gts.boxes), r)
                per_image.append(m)
                tp_gt += m.tp_gt
                matched_pred += m.matched_pred
                n_pred += m.n_pred
                n_gt += m.n_gt
            count = len(per_image) or 1
            precision = sum((m.precision for m in per_image), Fraction(0)) / count
            recall = sum((m.recall for m in per_image), Fraction(0)) / count
            f1 = sum((m.f1 for m in per_image), Fraction(0)) / count
            points.append(
                MetricsPoint(r, precision, recall, f1, n_pred, n_gt, tp_gt, matched_pred)
            )
    return points


@dataclass(frozen=True, slots=True)
class StageTiming:
    name: str
    fps: float

    def __post_init__(self) -> None:
        if self.fps <= 0:
            raise ValueError(f"fps must be > 0, got {self.fps}")


def compose_throughput(stages: list[StageTiming], mode: str) -> float:
    """Composed pipeline FPS: serial = 1 / sum(1/fps_i), parallel = min(fps_i)."""
    if not stages:
        raise ValueError("cannot compose an empty stage list")
    if mode == "serial":
        return 1.0 / sum(1.0 / s.fps for s in stages)
    if mode == "parallel":
        return min(s.fps for s in stages)
    raise ValueError(f"mode must be serial or parallel, got {mode!r}")


def _blobby_heatmap(dims: FrameDims, rng: np.random.Generator) -> Heatmap:
    _, heat = synthetic_scene(dims, rng, n_blobs=12)
    return heat


def _bench_stage(name: str, dims: FrameDims, rng: np.random.Generator):
    """(inputs, fn) pair for one benchmark stage; inputs cycle across runs."""
    k = 4
    if name == "binarize":
        inputs = [_blobby_heatmap(dims, rng) for _ in range(k)]
        return inputs, binarize
    if name == "components":
        inputs = [binarize(_blobby_heatmap(dims, rng)) for _ in range(k)]
        return inputs, component_boxes
    if name == "propose":
        inputs = [_blobby_heatmap(dims, rng) for _ in range(k)]
        return inputs, lambda h: component_boxes(binarize(h))
    if name == "grayscale":
        inputs = [
            rng.integers(0, 256, size=(dims.height, dims.width, 3), dtype=np.uint8)
            for _ in range(k)
        ]
        return inputs, to_grayscale
    raise ValueError(f"unknown benchmark stage {name!r}; known: binarize, components, propose, grayscale")


def bench(
    stage_names: list[str],
    dims: FrameDims,
    n_frames: int,
    seed: int = 0,
    warmup: int = 3,
) -> list[StageTiming]:
    """Mean wall-clock FPS per stage over ``n_frames`` runs (after warm-up)."""
    if n_frames <= 0:
        raise ValueError(f"n_frames must be >= 1, got {n_frames}")
    rng = np.random.default_rng(seed)
    timings = []
    for name in stage_names:
        inputs, fn = _bench_stage(name, dims, rng)
        for i in range(warmup):
            fn(inputs[i % len(inputs)])
        start = time.perf_counter()
        for i in range(n_frames):
            fn(inputs[i % len(inputs)])
        elapsed = time.perf_counter() - start
        timings.append(StageTiming(name, n_frames / elapsed if elapsed > 0 else float("inf")))
    return timings
