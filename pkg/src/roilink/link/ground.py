"""Ground-side receiver: frame assembly, compositing, detector plugin, records.

The receiver consumes the downstream message stream, reassembles each frame
(FrameMeta + BaseLayer + RoiList + the listed tiles), composites the operator
view, optionally runs an external detector on each tile, and publishes a
per-frame record to the recorder and the WebSocket bridge.
"""

from __future__ import annotations

import base64
import csv
import io
import json
import logging
import shlex
import subprocess
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from PIL import Image

from ..geometry import FrameDims, RectPx, union_area
from ..selection import ScoredBox, pixel_budget
from .pixelops import composite
from .protocol import (
    Ack,
    BaseLayer,
    Bye,
    FrameMeta,
    Hello,
    Origin,
    RoiList,
    RoiTile,
    WireMessage,
)

log = logging.getLogger(__name__)

_ORIGIN_TAGS = {Origin.ALGORITHMIC: "algorithmic", Origin.OPERATOR_REQUESTED: "operator"}


class PluginError(RuntimeError):
    """Detector plugin failed for one tile; the pipeline continues."""


def run_detector_plugin(
    tile: RoiTile, plugin_cmd: str | list[str], timeout: float = 5.0
) -> list[ScoredBox]:
    """Run an external detector on one tile.

    The tile is written as PNG to the command's stdin; each stdout line is one
    detection ``x y w h score`` in tile-local coordinates, mapped here into
    frame coordinates (clamped to the tile).

    Raises:
        PluginError: nonzero exit, timeout, or a malformed output line.
    """
    cmd = shlex.split(plugin_cmd) if isinstance(plugin_cmd, str) else list(plugin_cmd)
    r = tile.rect
    patch = np.frombuffer(tile.pixels, dtype=np.uint8).reshape(r.h, r.w, 3)
    buf = io.BytesIO()
    Image.fromarray(patch).save(buf, format="PNG")
    try:
        proc = subprocess.run(
            cmd, input=buf.getvalue(), capture_output=True, timeout=timeout
        )
    except subprocess.TimeoutExpired as exc:
        raise PluginError(f"plugin timed out after {timeout}s") from exc
    except OSError as exc:
        raise PluginError(f"plugin failed to start: {exc}") from exc
    if proc.returncode != 0:
        raise PluginError(f"plugin exited {proc.returncode}: {proc.stderr[:200]!r}")
    boxes = []
    tile_box = RectPx(0, 0, r.w, r.h)
    for line in proc.stdout.decode("utf-8", "replace").splitlines():
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 5:
            raise PluginError(f"malformed detection line: {line!r}")
        try:
            x, y, w, h = (int(round(float(v))) for v in parts[:4])
            score = float(parts[4])
        except ValueError as exc:
            raise PluginError(f"malformed detection line: {line!r}") from exc
        local = RectPx(max(x, 0), max(y, 0), max(w, 0), max(h, 0)).clamped(
            FrameDims(tile_box.w, tile_box.h)
        )
        if local.is_empty:
            continue
        boxes.append(
            ScoredBox(RectPx(local.x + r.x, local.y + r.y, local.w, local.h), min(max(score, 0.0), 1.0))
        )
    return boxes


@dataclass
class AssembledFrame:
    meta: FrameMeta
    base: BaseLayer
    entries: tuple
    tiles: list[RoiTile] = field(default_factory=list)

    @property
    def complete(self) -> bool:
        return len(self.tiles) == len(self.entries)

    def composited(self) -> np.ndarray:
        return composite(self.base, self.tiles, self.meta.dims, self.meta.downscale)


def frame_record(
    assembled: AssembledFrame,
    detections: list[ScoredBox],
    composited: np.ndarray | None = None,
    include_png: bool = True,
) -> dict:
    """The per-frame JSON record served to the operator console."""
    record = {
        "type": "frame",
        "frame_id": assembled.meta.frame_id,
        "timestamp_us": assembled.meta.timestamp_us,
        "width": assembled.meta.dims.width,
        "height": assembled.meta.dims.height,
        "rois": [
            {"x": e.rect.x, "y": e.rect.y, "w": e.rect.w, "h": e.rect.h, "origin": _ORIGIN_TAGS[e.origin]}
            for e in assembled.entries
        ],
        "detections": [
            {"x": b.rect.x, "y": b.rect.y, "w": b.rect.w, "h": b.rect.h, "score": b.confidence}
            for b in detections
        ],
    }
    if include_png:
        img = composited if composited is not None else assembled.composited()
        buf = io.BytesIO()
        Image.fromarray(img).save(buf, format="PNG")
        record["png_b64"] = base64.b64encode(buf.getvalue()).decode("ascii")
    return record


class FrameRecorder:
    """Writes composited PNGs, per-frame JSON, and a session.csv row per frame."""

    CSV_HEADER = [
        "frame_id", "timestamp_us", "n_rois", "n_operator_rois",
        "tile_pixels", "union_pixels", "budget_px", "n_detections",
    ]

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.csv_path = self.directory / "session.csv"
        self._csv = open(self.csv_path, "w", newline="")
        self._writer = csv.writer(self._csv)
        self._writer.writerow(self.CSV_HEADER)

    def record(self, assembled: AssembledFrame, composited, detections, budget_px: int) -> None:
        fid = assembled.meta.frame_id
        Image.fromarray(composited).save(self.directory / f"frame_{fid:06d}.png")
        record = frame_record(assembled, detections, composited, include_png=False)
        (self.directory / f"frame_{fid:06d}.json").write_text(json.dumps(record, indent=1))
        rects = [t.rect for t in assembled.tiles]
        self._writer.writerow(
            [
                fid,
                assembled.meta.timestamp_us,
                len(assembled.entries),
                sum(1 for e in assembled.entries if e.origin is Origin.OPERATOR_REQUESTED),
                sum(r.area for r in rects),
                union_area(rects),
                budget_px,
                len(detections),
            ]
        )
        self._csv.flush()

    def close(self) -> None:
        self._csv.close()


class GroundSession:
    """Assembles downstream messages into frames and fans out the results."""

    def __init__(
        self,
        *,
        plugin_cmd: str | list[str] | None = None,
        plugin_timeout: float = 5.0,
        recorder: FrameRecorder | None = None,
        on_frame: Callable[[AssembledFrame, np.ndarray, list[ScoredBox]], None] | None = None,
        on_ack: Callable[[Ack], None] | None = None,
    ):
        self.plugin_cmd = plugin_cmd
        self.plugin_timeout = plugin_timeout
        self.recorder = recorder
        self.on_frame = on_frame
        self.on_ack = on_ack
        self.hello: Hello | None = None
        self.frames_completed = 0
        self.frames_dropped = 0
        self.plugin_failures = 0
        self.finished = False
        self._current: AssembledFrame | None = None
        self._pending_meta: FrameMeta | None = None
        self._pending_base: BaseLayer | None = None

    def feed_message(self, msg: WireMessage) -> None:
        if isinstance(msg, Hello):
            self.hello = msg
        elif isinstance(msg, FrameMeta):
            if self._current is not None and not self._current.complete:
                self.frames_dropped += 1
                log.warning("frame %d incomplete, dropped", self._current.meta.frame_id)
            self._current = None
            self._pending_meta = msg
            self._pending_base = None
        elif isinstance(msg, BaseLayer):
            self._pending_base = msg
        elif isinstance(msg, RoiList):
            if self._pending_meta is None or self._pending_base is None:
                log.warning("RoiList without preceding FrameMeta/BaseLayer, ignored")
                return
            self._current = AssembledFrame(self._pending_meta, self._pending_base, msg.entries)
            if self._current.complete:  # zero RoIs
                self._finish(self._current)
        elif isinstance(msg, RoiTile):
            if self._current is None or msg.frame_id != self._current.meta.frame_id:
                log.warning("orphan tile for frame %d, ignored", msg.frame_id)
                return
            self._current.tiles.append(msg)
            if self._current.complete:
                self._finish(self._current)
        elif isinstance(msg, Ack):
            if self.on_ack is not None:
                self.on_ack(msg)
        elif isinstance(msg, Bye):
            self.finished = True

    def _finish(self, assembled: AssembledFrame) -> None:
        composited = assembled.composited()
        detections: list[ScoredBox] = []
        if self.plugin_cmd is not None:
            for tile in assembled.tiles:
                try:
                    detections.extend(
                        run_detector_plugin(tile, self.plugin_cmd, self.plugin_timeout)
                    )
                except PluginError as exc:
                    self.plugin_failures += 1
                    log.warning("tile %s undetected: %s", tile.rect, exc)
        if self.recorder is not None:
            budget_px = pixel_budget(assembled.meta.budget_r_micro / 1_000_000, assembled.meta.dims)
            self.recorder.record(assembled, composited, detections, budget_px)
        if self.on_frame is not None:
            self.on_frame(assembled, composited, detections)
        self.frames_completed += 1
        self._current = None
