"""Drone-side sender: per-frame planning under the bandwidth budget.

Operator-requested rects outrank algorithmic proposals: they are placed first
in the selection order and consume budget first (by default they count inside
the frame budget; an exemption flag lets them ride on top). A request is
acknowledged in the same frame batch that first carries its tile, so the
ack-to-tile latency is zero frames by construction; requests that can never
fit the budget, or lie out of bounds, are rejected with a coded Ack.
"""

from __future__ import annotations

import logging
import queue
from dataclasses import dataclass, field

import numpy as np

from ..geometry import FrameDims, RectPx, union_area
from ..selection import (
    Accounting,
    ProposalSet,
    SelectionMode,
    SelectionPolicy,
    pixel_budget,
    select_pixels,
)
from .pixelops import crop_tile, make_base_layer
from .protocol import (
    Ack,
    AckCode,
    CustomRoiRequest,
    FrameMeta,
    Hello,
    Origin,
    RequestFlag,
    RoiEntry,
    RoiList,
    WireMessage,
)

log = logging.getLogger(__name__)

_POLICY_CODES = {SelectionMode.AREA_GREEDY: 0, SelectionMode.CONFIDENCE_PREFIX: 1}
_ACCOUNTING_CODES = {Accounting.UNION_PIXELS: 0, Accounting.SUM_OF_CROP_AREAS: 1}


@dataclass(frozen=True)
class DroneConfig:
    dims: FrameDims
    budget_r: float
    policy: SelectionPolicy
    downscale: int = 8
    requests_exempt_from_budget: bool = False

    def hello(self) -> Hello:
        return Hello(
            self.dims.width,
            self.dims.height,
            self.downscale,
            round(self.budget_r * 1_000_000),
            _POLICY_CODES[self.policy.mode],
            _ACCOUNTING_CODES[self.policy.accounting],
        )


@dataclass
class FramePlan:
    messages: list[WireMessage]
    tiled_request_ids: list[int]
    rejected_request_ids: list[int]
    deferred_request_ids: list[int]


def _accounted(rects: list[RectPx], accounting: Accounting) -> int:
    if accounting is Accounting.SUM_OF_CROP_AREAS:
        return sum(r.area for r in rects)
    return union_area(rects)


def plan_frame(
    frame: np.ndarray,
    proposals: ProposalSet,
    pending_requests: list[CustomRoiRequest],
    budget_r: float,
    policy: SelectionPolicy,
    *,
    frame_id: int,
    timestamp_us: int,
    downscale: int = 8,
    requests_exempt: bool = False,
    already_acked: frozenset[int] = frozenset(),
) -> FramePlan:
    """Plan one frame's downstream batch.

    Message order: Acks, FrameMeta, BaseLayer, RoiList, then one RoiTile per
    listed entry. The base layer does not count against the budget; only
    full-quality tile pixels do.
    """
    dims = FrameDims(frame.shape[1], frame.shape[0])
    if dims != proposals.frame:
        raise ValueError(f"frame is {dims}, proposals expect {proposals.frame}")
    budget_px = pixel_budget(budget_r, dims)

    acks: list[Ack] = []
    operator_rects: list[RectPx] = []
    tiled_ids: list[int] = []
    rejected_ids: list[int] = []
    deferred_ids: list[int] = []
    for req in pending_requests:
        if not req.rect.within(dims) or req.rect.is_empty:
            acks.append(Ack(req.request_id, AckCode.REJECTED_BOUNDS))
            rejected_ids.append(req.request_id)
            continue
        if requests_exempt:
            fits = True
        else:
            fits = _accounted(operator_rects + [req.rect], policy.accounting) <= budget_px
            if not fits and _accounted([req.rect], policy.accounting) > budget_px:
                # can never fit any frame's budget: reject instead of starving
                acks.append(Ack(req.request_id, AckCode.REJECTED_BUDGET))
                rejected_ids.append(req.request_id)
                continue
        if not fits:
            deferred_ids.append(req.request_id)
            continue
        operator_rects.append(req.rect)
        tiled_ids.append(req.request_id)
        if req.request_id not in already_acked:
            acks.append(Ack(req.request_id, AckCode.ACCEPTED))

    base_for_selection = () if requests_exempt else tuple(operator_rects)
    algorithmic = select_pixels(proposals, budget_px, policy, base_for_selection)

    entries = [RoiEntry(r, Origin.OPERATOR_REQUESTED) for r in operator_rects]
    entries += [RoiEntry(r, Origin.ALGORITHMIC) for r in algorithmic]
    meta = FrameMeta(frame_id, timestamp_us, dims, downscale, round(budget_r * 1_000_000))
    messages: list[WireMessage] = [*acks, meta, make_base_layer(frame, frame_id, downscale)]
    messages.append(RoiList(frame_id, tuple(entries)))
    messages += [crop_tile(frame, e.rect, frame_id, e.origin) for e in entries]
    return FramePlan(messages, tiled_ids, rejected_ids, deferred_ids)


def drone_step(
    frame: np.ndarray,
    proposals: ProposalSet,
    pending_requests: list[CustomRoiRequest],
    budget_r: float,
    policy: SelectionPolicy,
    *,
    frame_id: int = 0,
    timestamp_us: int = 0,
    downscale: int = 8,
) -> list[WireMessage]:
    """One sender step: the planned downstream messages for a single frame."""
    return plan_frame(
        frame,
        proposals,
        pending_requests,
        budget_r,
        policy,
        frame_id=frame_id,
        timestamp_us=timestamp_us,
        downscale=downscale,
    ).messages


@dataclass
class DroneSession:
    """Stateful sender: monotone frame ids, persistent-request bookkeeping.

    ``submit_request`` is thread-safe; requests land in the next frame's
    selection step at the latest.
    """

    config: DroneConfig
    _queue: queue.SimpleQueue = field(default_factory=queue.SimpleQueue)
    _pending: list[CustomRoiRequest] = field(default_factory=list)
    _acked: set[int] = field(default_factory=set)
    _next_frame_id: int = 0

    def submit_request(self, req: CustomRoiRequest) -> None:
        self._queue.put(req)

    def _drain(self) -> None:
        while True:
            try:
                req = self._queue.get_nowait()
            except queue.Empty:
                return
            if req.persistent is RequestFlag.CANCEL:
                before = len(self._pending)
                self._pending = [p for p in self._pending if p.request_id != req.request_id]
                if len(self._pending) != before:
                    log.info("request %d cancelled", req.request_id)
                self._acked.discard(req.request_id)
            else:
                self._pending.append(req)

    def step(self, frame: np.ndarray, proposals: ProposalSet, timestamp_us: int) -> list[WireMessage]:
        self._drain()
        plan = plan_frame(
            frame,
            proposals,
            self._pending,
            self.config.budget_r,
            self.config.policy,
            frame_id=self._next_frame_id,
            timestamp_us=timestamp_us,
            downscale=self.config.downscale,
            requests_exempt=self.config.requests_exempt_from_budget,
            already_acked=frozenset(self._acked),
        )
        self._next_frame_id += 1
        self._acked.update(plan.tiled_request_ids)
        done = set(plan.rejected_request_ids)
        done.update(
            rid
            for rid in plan.tiled_request_ids
            if not any(
                p.request_id == rid and p.persistent is RequestFlag.PERSISTENT
                for p in self._pending
            )
        )
        self._pending = [p for p in self._pending if p.request_id not in done]
        return plan.messages
