"""Bandwidth-budgeted RoI streaming pipeline: proposal, selection, wire
protocol, matching metrics, and the bandwidth-sweep evaluation harness."""

from .geometry import FrameDims, RectPx, concentric_fit, intersect, iogt, iou, union_area
from .matching import AnnotationSet, MatchConfig, MatchMode, MetricsPoint, match, metrics
from .saliency import BinaryMap, Heatmap, binarize, component_boxes, propose_from_heatmap
from .selection import (
    Accounting,
    ProposalSet,
    ScoredBox,
    SelectionMode,
    SelectionPolicy,
    select,
)
from .sweep import SweepConfig, compose_throughput, default_r_grid, sweep

__version__ = "0.1.0"

__all__ = [
    "AnnotationSet",
    "Accounting",
    "BinaryMap",
    "FrameDims",
    "Heatmap",
    "MatchConfig",
    "MatchMode",
    "MetricsPoint",
    "ProposalSet",
    "RectPx",
    "ScoredBox",
    "SelectionMode",
    "SelectionPolicy",
    "SweepConfig",
    "binarize",
    "component_boxes",
    "compose_throughput",
    "concentric_fit",
    "default_r_grid",
    "intersect",
    "iogt",
    "iou",
    "match",
    "metrics",
    "propose_from_heatmap",
    "select",
    "sweep",
    "union_area",
]
