"""WebSocket bridge between the ground session and the operator console.

Downstream messages are JSON: ``{"type": "frame", ...}`` records with a
base64 PNG plus RoI/detection overlays, and ``{"type": "ack", ...}`` for
request acknowledgements. Upstream: ``{"type": "request", ...}`` and
``{"type": "cancel", ...}``.

Frames are delivered newest-wins: a slow client skips frames rather than
queueing them unboundedly. Acks are never dropped.
"""

from __future__ import annotations

import asyncio
import logging
import threading
from collections import deque
from typing import Callable

import anyio
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from ..geometry import RectPx
from .protocol import CustomRoiRequest, RequestFlag

log = logging.getLogger(__name__)


class ClientFeed:
    """Per-connection mux: unbounded ack queue + newest-wins frame slot."""

    def __init__(self) -> None:
        self._cond = threading.Condition()
        self._acks: deque[dict] = deque()
        self._frame: tuple[int, dict] | None = None
        self.closed = False

    def offer_frame(self, seq: int, record: dict) -> None:
        with self._cond:
            self._frame = (seq, record)
            self._cond.notify_all()

    def offer_ack(self, record: dict) -> None:
        with self._cond:
            self._acks.append(record)
            self._cond.notify_all()

    def close(self) -> None:
        with self._cond:
            self.closed = True
            self._cond.notify_all()

    def next_batch(self, last_seq: int, timeout: float = 0.25) -> tuple[list[dict], int]:
        """Pending acks plus the newest unseen frame; blocks up to ``timeout``."""
        with self._cond:
            if not self._ready(last_seq):
                self._cond.wait(timeout)
            out = list(self._acks)
            self._acks.clear()
            if self._frame is not None and self._frame[0] > last_seq:
                last_seq = self._frame[0]
                out.append(self._frame[1])
            return out, last_seq

    def _ready(self, last_seq: int) -> bool:
        return bool(self._acks) or self.closed or (
            self._frame is not None and self._frame[0] > last_seq
        )


class WsBridge:
    """Fan-out hub; ``publish_*`` are safe to call from any thread."""

    def __init__(self, send_upstream: Callable[[CustomRoiRequest], None] | None = None):
        self.send_upstream = send_upstream
        self._lock = threading.Lock()
        self._feeds: set[ClientFeed] = set()
        self._seq = 0
        self._latest: tuple[int, dict] | None = None

    def attach(self) -> ClientFeed:
        """New clients start from the most recent frame, if any."""
        feed = ClientFeed()
        with self._lock:
            self._feeds.add(feed)
            latest = self._latest
        if latest is not None:
            feed.offer_frame(*latest)
        return feed

    def detach(self, feed: ClientFeed) -> None:
        with self._lock:
            self._feeds.discard(feed)

    def close(self) -> None:
        with self._lock:
            feeds = list(self._feeds)
        for feed in feeds:
            feed.close()

    def publish_frame(self, record: dict) -> None:
        with self._lock:
            self._seq += 1
            seq, feeds = self._seq, list(self._feeds)
            self._latest = (seq, record)
        for feed in feeds:
            feed.offer_frame(seq, record)

    def publish_ack(self, request_id: int, code: int, code_name: str) -> None:
        record = {"type": "ack", "request_id": request_id, "code": code, "code_name": code_name}
        with self._lock:
            feeds = list(self._feeds)
        for feed in feeds:
            feed.offer_ack(record)

    def handle_upstream(self, data: dict) -> None:
        if self.send_upstream is None:
            log.warning("upstream message ignored, no drone link: %s", data)
            return
        mtype = data.get("type")
        if mtype == "request":
            flag = RequestFlag.PERSISTENT if data.get("persistent") else RequestFlag.ONE_SHOT
            req = CustomRoiRequest(
                int(data["request_id"]),
                RectPx(int(data["x"]), int(data["y"]), int(data["w"]), int(data["h"])),
                flag,
            )
        elif mtype == "cancel":
            req = CustomRoiRequest(int(data["request_id"]), RectPx.empty(), RequestFlag.CANCEL)
        else:
            log.warning("unknown upstream message type: %r", mtype)
            return
        self.send_upstream(req)


def create_app(bridge: WsBridge) -> FastAPI:
    app = FastAPI(title="roilink ground bridge")

    @app.get("/healthz")
    def health() -> dict:
        return {"status": "ok"}

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket) -> None:
        await ws.accept()
        feed = bridge.attach()

        async def receive_upstream() -> None:
            try:
                while True:
                    data = await ws.receive_json()
                    bridge.handle_upstream(data)
            except (WebSocketDisconnect, RuntimeError):
                feed.close()

        receiver = asyncio.create_task(receive_upstream())
        try:
            last_seq = 0
            while not feed.closed:
                batch, last_seq = await anyio.to_thread.run_sync(feed.next_batch, last_seq)
                for record in batch:
                    await ws.send_json(record)
        except (WebSocketDisconnect, RuntimeError):
            pass
        finally:
            bridge.detach(feed)
            receiver.cancel()

    return app
