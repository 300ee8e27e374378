"""Frame sources for the drone loop: synthetic scenes, image/heatmap folders."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np
from PIL import Image

from ..dataset import Dataset
from ..geometry import FrameDims
from ..rasters import read_pfm
from ..saliency import Heatmap, propose_from_heatmap
from ..selection import ProposalSet

FRAME_PERIOD_US = 100_000  # synthetic timestamps tick at 10 FPS


@dataclass(frozen=True)
class SourceFrame:
    index: int
    frame: np.ndarray  # HxWx3 uint8
    proposals: ProposalSet
    timestamp_us: int


def synthetic_scene(dims: FrameDims, rng: np.random.Generator, n_blobs: int = 3):
    """A sea-like noise background with a few bright rectangular objects.

    Returns (frame, heatmap): the heatmap is hot exactly on the objects, so
    proposal boxes land on them tightly.
    """
    frame = rng.integers(20, 90, size=(dims.height, dims.width, 3), dtype=np.uint8)
    frame[:, :, 2] += 60  # lean blue
    heat = rng.random((dims.height, dims.width)).astype(np.float32) * 0.3
    for _ in range(n_blobs):
        w = int(rng.integers(2, max(3, dims.width // 4)))
        h = int(rng.integers(2, max(3, dims.height // 4)))
        x = int(rng.integers(0, dims.width - w + 1))
        y = int(rng.integers(0, dims.height - h + 1))
        color = rng.integers(160, 255, size=3, dtype=np.uint8)
        frame[y : y + h, x : x + w] = color
        heat[y : y + h, x : x + w] = 0.9
    return frame, Heatmap(dims, heat)


def synthetic_frames(
    n_frames: int, dims: FrameDims, seed: int = 0, n_blobs: int = 3
) -> Iterator[SourceFrame]:
    rng = np.random.default_rng(seed)
    for i in range(n_frames):
        frame, heat = synthetic_scene(dims, rng, n_blobs)
        yield SourceFrame(i, frame, propose_from_heatmap(heat), i * FRAME_PERIOD_US)


def folder_frames(
    frames_dir: str | Path,
    heatmaps_dir: str | Path | None = None,
    dataset: Dataset | None = None,
    threshold: float = 0.5,
) -> Iterator[SourceFrame]:
    """Frames from a folder of images, proposals from PFM heatmaps or a
    detections dataset matched by file name."""
    paths = sorted(p for p in Path(frames_dir).iterdir() if p.suffix.lower() in {".png", ".jpg", ".jpeg"})
    if not paths:
        raise FileNotFoundError(f"no frames found in {frames_dir}")
    by_name = {}
    if dataset is not None and dataset.detections is not None:
        by_name = {rec.file_name: dataset.detections[rec.id] for rec in dataset.images}
    for i, path in enumerate(paths):
        frame = np.asarray(Image.open(path).convert("RGB"))
        dims = FrameDims(frame.shape[1], frame.shape[0])
        if heatmaps_dir is not None:
            heat = read_pfm(Path(heatmaps_dir) / (path.stem + ".pfm"))
            proposals = propose_from_heatmap(heat, threshold)
        elif path.name in by_name:
            proposals = by_name[path.name]
        else:
            proposals = ProposalSet(dims, ())
        yield SourceFrame(i, frame, proposals, i * FRAME_PERIOD_US)
