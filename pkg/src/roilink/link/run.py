"""Session runners: deterministic in-memory loopback and TCP drone/ground loops.

The loopback pushes every message through the real byte-level codec so wire
behavior is exercised end to end; requests injected while frame k is being
consumed on the ground reach the sender at frame k + 1.
"""

from __future__ import annotations

import logging
import socket
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from ..selection import ScoredBox
from .drone import DroneConfig, DroneSession
from .ground import AssembledFrame, FrameRecorder, GroundSession, frame_record
from .protocol import (
    Ack,
    Bye,
    CustomRoiRequest,
    MessageReader,
    WireMessage,
    encode,
)
from .sources import SourceFrame

log = logging.getLogger(__name__)


@dataclass
class LoopbackFrame:
    source: SourceFrame
    assembled: AssembledFrame
    composited: np.ndarray
    detections: list[ScoredBox]


@dataclass
class LoopbackResult:
    frames: list[LoopbackFrame] = field(default_factory=list)
    acks: list[tuple[int, Ack]] = field(default_factory=list)  # (frame index when seen, ack)
    frames_completed: int = 0
    plugin_failures: int = 0
    csv_path: str | None = None


def run_loopback(
    source: Iterable[SourceFrame],
    config: DroneConfig,
    *,
    plugin_cmd: str | list[str] | None = None,
    record_dir: str | None = None,
    inject: dict[int, list[CustomRoiRequest]] | None = None,
    capture: bool = False,
    on_frame: Callable[[LoopbackFrame], None] | None = None,
) -> LoopbackResult:
    """Drive a full drone + ground session over an in-memory byte stream.

    ``inject[k]`` requests are sent upstream right after the ground station
    finishes frame k, mimicking an operator reacting to that frame.
    """
    inject = inject or {}
    result = LoopbackResult()
    drone = DroneSession(config)
    down_reader = MessageReader()
    up_reader = MessageReader()

    current: dict = {"source": None}

    def ground_on_frame(assembled, composited, detections):
        lf = LoopbackFrame(current["source"], assembled, composited, detections)
        if capture:
            result.frames.append(lf)
        if on_frame is not None:
            on_frame(lf)

    recorder = FrameRecorder(record_dir) if record_dir else None
    ground = GroundSession(
        plugin_cmd=plugin_cmd,
        recorder=recorder,
        on_frame=ground_on_frame,
        on_ack=lambda ack: result.acks.append((current["source"].index, ack)),
    )

    def send_upstream(req: CustomRoiRequest) -> None:
        for msg in up_reader.feed(encode(req)):
            drone.submit_request(msg)

    try:
        for msg in down_reader.feed(encode(config.hello())):
            ground.feed_message(msg)
        for src in source:
            current["source"] = src
            batch = drone.step(src.frame, src.proposals, src.timestamp_us)
            payload = b"".join(encode(m) for m in batch)
            for msg in down_reader.feed(payload):
                ground.feed_message(msg)
            for req in inject.get(src.index, []):
                send_upstream(req)
        for msg in down_reader.feed(encode(Bye())):
            ground.feed_message(msg)
    finally:
        if recorder is not None:
            recorder.close()
            result.csv_path = str(recorder.csv_path)
    result.frames_completed = ground.frames_completed
    result.plugin_failures = ground.plugin_failures
    return result


def _recv_loop(
    conn: socket.socket, handler: Callable[[WireMessage], None], stop: threading.Event
) -> None:
    reader = MessageReader()
    conn.settimeout(0.2)
    while not stop.is_set():
        try:
            data = conn.recv(65536)
        except socket.timeout:
            continue
        except OSError:
            break
        if not data:
            break
        for msg in reader.feed(data):
            handler(msg)


def run_drone_over_socket(
    conn: socket.socket,
    source: Iterable[SourceFrame],
    config: DroneConfig,
    frame_period: float = 0.0,
    stop: threading.Event | None = None,
) -> int:
    """Sender loop over a connected socket; returns frames sent."""
    stop = stop or threading.Event()

    def on_upstream(msg: WireMessage) -> None:
        if isinstance(msg, CustomRoiRequest):
            drone.submit_request(msg)
        elif isinstance(msg, Bye):
            stop.set()

    drone = DroneSession(config)
    reader = threading.Thread(target=_recv_loop, args=(conn, on_upstream, stop), daemon=True)
    reader.start()
    sent = 0
    try:
        conn.sendall(encode(config.hello()))
        for src in source:
            if stop.is_set():
                break
            batch = drone.step(src.frame, src.proposals, src.timestamp_us)
            conn.sendall(b"".join(encode(m) for m in batch))
            sent += 1
            if frame_period > 0:
                time.sleep(frame_period)
        conn.sendall(encode(Bye()))
    except OSError as exc:
        log.warning("drone link closed early: %s", exc)
    finally:
        stop.set()
        reader.join(timeout=1.0)
    return sent


def run_ground_over_socket(
    conn: socket.socket, ground: GroundSession, stop: threading.Event | None = None
) -> None:
    """Receiver loop over a connected socket until Bye or disconnect."""
    stop = stop or threading.Event()
    reader = MessageReader()
    conn.settimeout(0.2)
    while not stop.is_set() and not ground.finished:
        try:
            data = conn.recv(65536)
        except socket.timeout:
            continue
        except OSError:
            break
        if not data:
            break
        for msg in reader.feed(data):
            ground.feed_message(msg)


def upstream_sender(conn: socket.socket) -> Callable[[CustomRoiRequest], None]:
    """Thread-safe request writer for the ground side of a socket."""
    lock = threading.Lock()

    def send(req: CustomRoiRequest) -> None:
        with lock:
            try:
                conn.sendall(encode(req))
            except OSError as exc:
                log.warning("failed to send request upstream: %s", exc)

    return send


def make_ground_callbacks(bridge=None, include_png: bool = True):
    """Standard on_frame/on_ack pair publishing records to a WsBridge."""

    def on_frame(assembled, composited, detections):
        if bridge is not None:
            bridge.publish_frame(frame_record(assembled, detections, composited, include_png))

    def on_ack(ack: Ack) -> None:
        if bridge is not None:
            bridge.publish_ack(ack.request_id, int(ack.code), ack.code.name.lower())

    return on_frame, on_ack
