"""Ground-truth / detection ingestion and the minimum-box-size transform.

Annotations and detections use COCO-style JSON: an ``images`` array carrying
id / file_name / width / height, and an ``annotations`` array with
``bbox: [x, y, w, h]`` plus an optional ``score``. Detection files may also be
a bare COCO-results list. Out-of-bounds boxes are clamped (and counted)
rather than rejected; boxes that clamp away entirely are dropped.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

from .geometry import FrameDims, RectPx
from .matching import AnnotationSet, MetricsPoint
from .selection import ProposalSet, ScoredBox

log = logging.getLogger(__name__)

METRICS_CSV_HEADER = ["r", "precision", "recall", "f1", "n_pred", "n_gt", "tp_gt", "matched_pred"]


class DatasetError(ValueError):
    """Malformed annotation/detection input; the message names the record."""


@dataclass(frozen=True, slots=True)
class ImageRecord:
    id: int
    file_name: str
    dims: FrameDims


@dataclass(frozen=True)
class Dataset:
    images: tuple[ImageRecord, ...]
    annotations: dict[int, AnnotationSet] = field(default_factory=dict)
    detections: dict[int, ProposalSet] | None = None
    clamp_count: int = 0

    def dims_of(self, image_id: int) -> FrameDims:
        for rec in self.images:
            if rec.id == image_id:
                return rec.dims
        raise KeyError(image_id)


def _as_int(value, what: str) -> int:
    try:
        return int(round(float(value)))
    except (TypeError, ValueError) as exc:
        raise DatasetError(f"{what}: not a number ({value!r})") from exc


def _parse_bbox(raw, what: str) -> RectPx:
    if not isinstance(raw, (list, tuple)) or len(raw) != 4:
        raise DatasetError(f"{what}: bbox must be [x, y, w, h], got {raw!r}")
    x, y, w, h = (_as_int(v, what) for v in raw)
    if w < 0 or h < 0:
        raise DatasetError(f"{what}: negative box dims {w}x{h}")
    return RectPx(x, y, w, h)


def _parse_images(entries) -> tuple[ImageRecord, ...]:
    images = []
    seen = set()
    for i, entry in enumerate(entries):
        what = f"image record {i}"
        try:
            img_id = int(entry["id"])
            file_name = str(entry.get("file_name", f"{img_id}.png"))
            dims = FrameDims(int(entry["width"]), int(entry["height"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise DatasetError(f"{what}: {exc}") from exc
        if img_id in seen:
            raise DatasetError(f"{what}: duplicate image id {img_id}")
        seen.add(img_id)
        images.append(ImageRecord(img_id, file_name, dims))
    return tuple(images)


def _clamp(rect: RectPx, dims: FrameDims, counter: list[int]) -> RectPx | None:
    clamped = rect.clamped(dims)
    if clamped != rect:
        counter[0] += 1
        if clamped.is_empty:
            return None
    return clamped


def load_dataset(annotations_path: str | Path, detections_path: str | Path | None = None) -> Dataset:
    """Load and cross-validate annotation (and optional detection) files."""
    try:
        doc = json.loads(Path(annotations_path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DatasetError(f"{annotations_path}: {exc}") from exc
    if not isinstance(doc, dict) or "images" not in doc:
        raise DatasetError(f"{annotations_path}: expected an object with an 'images' array")

    images = _parse_images(doc["images"])
    dims_by_id = {rec.id: rec.dims for rec in images}
    counter = [0]

    gt_boxes: dict[int, list[RectPx]] = {rec.id: [] for rec in images}
    for i, entry in enumerate(doc.get("annotations", [])):
        what = f"annotation {entry.get('id', i)}"
        img_id = _as_int(entry.get("image_id"), what)
        if img_id not in dims_by_id:
            raise DatasetError(f"{what}: dangling image_id {img_id}")
        rect = _parse_bbox(entry.get("bbox"), what)
        kept = _clamp(rect, dims_by_id[img_id], counter)
        if kept is not None:
            gt_boxes[img_id].append(kept)
    annotations = {
        img_id: AnnotationSet(dims_by_id[img_id], tuple(boxes))
        for img_id, boxes in gt_boxes.items()
    }

    detections = None
    if detections_path is not None:
        detections = _load_detections(detections_path, dims_by_id, counter)

    if counter[0]:
        log.warning("clamped %d out-of-bounds boxes while loading", counter[0])
    return Dataset(images, annotations, detections, clamp_count=counter[0])


def _load_detections(path: str | Path, dims_by_id: dict[int, FrameDims], counter: list[int]):
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DatasetError(f"{path}: {exc}") from exc
    entries = doc if isinstance(doc, list) else doc.get("annotations", [])
    det_boxes: dict[int, list[ScoredBox]] = {img_id: [] for img_id in dims_by_id}
    for i, entry in enumerate(entries):
        what = f"detection {entry.get('id', i)}"
        img_id = _as_int(entry.get("image_id"), what)
        if img_id not in dims_by_id:
            raise DatasetError(f"{what}: dangling image_id {img_id}")
        rect = _parse_bbox(entry.get("bbox"), what)
        score = entry.get("score")
        if score is not None:
            score = float(score)
            if not 0.0 <= score <= 1.0:
                raise DatasetError(f"{what}: score {score} outside [0,1]")
        kept = _clamp(rect, dims_by_id[img_id], counter)
        if kept is not None:
            det_boxes[img_id].append(ScoredBox(kept, score))
    return {
        img_id: ProposalSet(dims_by_id[img_id], tuple(boxes))
        for img_id, boxes in det_boxes.items()
    }


def save_dataset(
    dataset: Dataset,
    annotations_path: str | Path,
    detections_path: str | Path | None = None,
) -> None:
    doc = {
        "images": [
            {"id": r.id, "file_name": r.file_name, "width": r.dims.width, "height": r.dims.height}
            for r in dataset.images
        ],
        "annotations": [
            {"id": n, "image_id": img_id, "bbox": [b.x, b.y, b.w, b.h]}
            for n, (img_id, b) in enumerate(
                (img_id, b)
                for img_id in sorted(dataset.annotations)
                for b in dataset.annotations[img_id].boxes
            )
        ],
    }
    Path(annotations_path).write_text(json.dumps(doc, indent=1))
    if detections_path is not None and dataset.detections is not None:
        results = []
        for img_id in sorted(dataset.detections):
            for sb in dataset.detections[img_id].boxes:
                entry = {"image_id": img_id, "bbox": [sb.rect.x, sb.rect.y, sb.rect.w, sb.rect.h]}
                if sb.confidence is not None:
                    entry["score"] = sb.confidence
                results.append(entry)
        Path(detections_path).write_text(json.dumps(results, indent=1))


def _expand_axis(pos: int, size: int, min_size: int, frame_size: int) -> tuple[int, int]:
    if size >= min_size:
        return pos, size
    if frame_size < min_size:
        return 0, frame_size
    grown = pos + (size - min_size) // 2
    return max(0, min(grown, frame_size - min_size)), min_size


def expand_rect(rect: RectPx, dims: FrameDims, min_w: int, min_h: int) -> RectPx:
    """Grow a box to the minimum size about its center, translated inward to fit.

    Axes are independent: a dimension already at or above the minimum is left
    alone, and an axis where the frame itself is below the minimum spans the
    full frame.
    """
    x, w = _expand_axis(rect.x, rect.w, min_w, dims.width)
    y, h = _expand_axis(rect.y, rect.h, min_h, dims.height)
    return RectPx(x, y, w, h)


def expand_min_size(dataset: Dataset, min_w: int = 500, min_h: int = 500) -> Dataset:
    """Apply the minimum-box-size transform to every ground-truth box."""
    if min_w < 1 or min_h < 1:
        raise ValueError(f"minimum dims must be >= 1, got {min_w}x{min_h}")
    expanded = {
        img_id: AnnotationSet(
            aset.frame,
            tuple(expand_rect(b, aset.frame, min_w, min_h) for b in aset.boxes),
        )
        for img_id, aset in dataset.annotations.items()
    }
    return replace(dataset, annotations=expanded)


def write_metrics_csv(points: list[MetricsPoint], path: str | Path) -> None:
    """Write sweep rows; ratio columns round to 6 decimals."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(METRICS_CSV_HEADER)
        for p in points:
            writer.writerow(
                [
                    f"{float(p.r):.6f}",
                    f"{float(p.precision):.6f}",
                    f"{float(p.recall):.6f}",
                    f"{float(p.f1):.6f}",
                    p.n_pred,
                    p.n_gt,
                    p.tp_gt,
                    p.matched_pred,
                ]
            )
