"""Length-prefixed binary wire protocol between drone and ground station.

Frame layout, all integers little-endian:

    magic 'RLNK' | version u8 (= 1) | msg_type u8 | payload_len u32 | payload

Payloads:

    Hello            width u32, height u32, downscale u16, budget_r u32 (micro),
                     policy u8, accounting u8
    FrameMeta        frame_id u64, timestamp_us u64, width u32, height u32,
                     downscale u16, budget_r u32 (micro-units, r * 10^6)
    BaseLayer        frame_id u64, width u32, height u32, width*height gray bytes
    RoiList          frame_id u64, count u32, count * (x,y,w,h u32, origin u8)
    RoiTile          frame_id u64, x,y,w,h u32, origin u8, 3*w*h raw RGB bytes
    CustomRoiRequest request_id u64, x,y,w,h u32, persistent u8
                     (0 = one-shot, 1 = persistent, 2 = cancel)
    Ack              request_id u64, code u8
    Bye              empty

A stream survives malformed input by resynchronizing on the next magic.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum

from ..geometry import FrameDims, RectPx

MAGIC = b"RLNK"
VERSION = 1
HEADER = struct.Struct("<4sBBI")

# refuse to buffer absurd length claims in streaming mode (a 4K RGB tile is ~25 MB)
MAX_PAYLOAD = 64 * 1024 * 1024

_HELLO = struct.Struct("<IIHIBB")
_FRAME_META = struct.Struct("<QQIIHI")
_BASE_HDR = struct.Struct("<QII")
_ROI_LIST_HDR = struct.Struct("<QI")
_ROI_ENTRY = struct.Struct("<IIIIB")
_TILE_HDR = struct.Struct("<QIIIIB")
_REQUEST = struct.Struct("<QIIIIB")
_ACK = struct.Struct("<QB")


class ProtocolError(Exception):
    """Base for everything decode can raise."""


class BadMagicError(ProtocolError):
    pass


class BadVersionError(ProtocolError):
    pass


class UnknownTypeError(ProtocolError):
    pass


class TruncatedError(ProtocolError):
    """More bytes are needed; recoverable in streaming mode."""


class LengthMismatchError(ProtocolError):
    """The payload does not parse to exactly its declared length."""


class MsgType(IntEnum):
    HELLO = 1
    FRAME_META = 2
    BASE_LAYER = 3
    ROI_LIST = 4
    ROI_TILE = 5
    CUSTOM_ROI_REQUEST = 6
    ACK = 7
    BYE = 8


class Origin(IntEnum):
    ALGORITHMIC = 0
    OPERATOR_REQUESTED = 1


class RequestFlag(IntEnum):
    ONE_SHOT = 0
    PERSISTENT = 1
    CANCEL = 2


class AckCode(IntEnum):
    ACCEPTED = 0
    REJECTED_BOUNDS = 1
    REJECTED_BUDGET = 2
    CANCELLED = 3


@dataclass(frozen=True, slots=True)
class Hello:
    width: int
    height: int
    downscale: int
    budget_r_micro: int
    policy: int
    accounting: int

    @property
    def budget_r(self) -> float:
        return self.budget_r_micro / 1_000_000


@dataclass(frozen=True, slots=True)
class FrameMeta:
    frame_id: int
    timestamp_us: int
    dims: FrameDims
    downscale: int
    budget_r_micro: int

    @property
    def budget_r(self) -> float:
        return self.budget_r_micro / 1_000_000


@dataclass(frozen=True, slots=True)
class BaseLayer:
    frame_id: int
    width: int
    height: int
    pixels: bytes  # width*height grayscale bytes, row-major


@dataclass(frozen=True, slots=True)
class RoiEntry:
    rect: RectPx
    origin: Origin


@dataclass(frozen=True, slots=True)
class RoiList:
    frame_id: int
    entries: tuple[RoiEntry, ...]


@dataclass(frozen=True, slots=True)
class RoiTile:
    frame_id: int
    rect: RectPx
    origin: Origin
    pixels: bytes  # 3*w*h interleaved RGB bytes, row-major

    def __post_init__(self) -> None:
        if len(self.pixels) != 3 * self.rect.w * self.rect.h:
            raise ValueError(
                f"tile payload is {len(self.pixels)} bytes, rect needs {3 * self.rect.area}"
            )


@dataclass(frozen=True, slots=True)
class CustomRoiRequest:
    request_id: int
    rect: RectPx
    persistent: RequestFlag = RequestFlag.ONE_SHOT


@dataclass(frozen=True, slots=True)
class Ack:
    request_id: int
    code: AckCode


@dataclass(frozen=True, slots=True)
class Bye:
    pass


WireMessage = Hello | FrameMeta | BaseLayer | RoiList | RoiTile | CustomRoiRequest | Ack | Bye


def encode(msg: WireMessage) -> bytes:
    if isinstance(msg, Hello):
        mtype = MsgType.HELLO
        payload = _HELLO.pack(
            msg.width, msg.height, msg.downscale, msg.budget_r_micro, msg.policy, msg.accounting
        )
    elif isinstance(msg, FrameMeta):
        mtype = MsgType.FRAME_META
        payload = _FRAME_META.pack(
            msg.frame_id,
            msg.timestamp_us,
            msg.dims.width,
            msg.dims.height,
            msg.downscale,
            msg.budget_r_micro,
        )
    elif isinstance(msg, BaseLayer):
        mtype = MsgType.BASE_LAYER
        payload = _BASE_HDR.pack(msg.frame_id, msg.width, msg.height) + msg.pixels
    elif isinstance(msg, RoiList):
        mtype = MsgType.ROI_LIST
        payload = _ROI_LIST_HDR.pack(msg.frame_id, len(msg.entries)) + b"".join(
            _ROI_ENTRY.pack(e.rect.x, e.rect.y, e.rect.w, e.rect.h, e.origin)
            for e in msg.entries
        )
    elif isinstance(msg, RoiTile):
        mtype = MsgType.ROI_TILE
        r = msg.rect
        payload = _TILE_HDR.pack(msg.frame_id, r.x, r.y, r.w, r.h, msg.origin) + msg.pixels
    elif isinstance(msg, CustomRoiRequest):
        mtype = MsgType.CUSTOM_ROI_REQUEST
        r = msg.rect
        payload = _REQUEST.pack(msg.request_id, r.x, r.y, r.w, r.h, msg.persistent)
    elif isinstance(msg, Ack):
        mtype = MsgType.ACK
        payload = _ACK.pack(msg.request_id, msg.code)
    elif isinstance(msg, Bye):
        mtype = MsgType.BYE
        payload = b""
    else:
        raise TypeError(f"not a wire message: {type(msg).__name__}")
    return HEADER.pack(MAGIC, VERSION, mtype, len(payload)) + payload


def _parse_payload(mtype: int, payload: bytes) -> WireMessage:
    try:
        if mtype == MsgType.HELLO:
            if len(payload) != _HELLO.size:
                raise LengthMismatchError(f"Hello payload must be {_HELLO.size} bytes")
            return Hello(*_HELLO.unpack(payload))
        if mtype == MsgType.FRAME_META:
            if len(payload) != _FRAME_META.size:
                raise LengthMismatchError(f"FrameMeta payload must be {_FRAME_META.size} bytes")
            fid, ts, w, h, ds, micro = _FRAME_META.unpack(payload)
            return FrameMeta(fid, ts, FrameDims(w, h), ds, micro)
        if mtype == MsgType.BASE_LAYER:
            if len(payload) < _BASE_HDR.size:
                raise LengthMismatchError("BaseLayer header truncated")
            fid, w, h = _BASE_HDR.unpack_from(payload)
            if len(payload) != _BASE_HDR.size + w * h:
                raise LengthMismatchError(f"BaseLayer needs {w * h} pixel bytes")
            return BaseLayer(fid, w, h, payload[_BASE_HDR.size :])
        if mtype == MsgType.ROI_LIST:
            if len(payload) < _ROI_LIST_HDR.size:
                raise LengthMismatchError("RoiList header truncated")
            fid, count = _ROI_LIST_HDR.unpack_from(payload)
            if len(payload) != _ROI_LIST_HDR.size + count * _ROI_ENTRY.size:
                raise LengthMismatchError(f"RoiList needs {count} entries")
            entries = []
            for i in range(count):
                x, y, w, h, origin = _ROI_ENTRY.unpack_from(
                    payload, _ROI_LIST_HDR.size + i * _ROI_ENTRY.size
                )
                entries.append(RoiEntry(RectPx(x, y, w, h), Origin(origin)))
            return RoiList(fid, tuple(entries))
        if mtype == MsgType.ROI_TILE:
            if len(payload) < _TILE_HDR.size:
                raise LengthMismatchError("RoiTile header truncated")
            fid, x, y, w, h, origin = _TILE_HDR.unpack_from(payload)
            if len(payload) != _TILE_HDR.size + 3 * w * h:
                raise LengthMismatchError(f"RoiTile needs {3 * w * h} pixel bytes")
            return RoiTile(fid, RectPx(x, y, w, h), Origin(origin), payload[_TILE_HDR.size :])
        if mtype == MsgType.CUSTOM_ROI_REQUEST:
            if len(payload) != _REQUEST.size:
                raise LengthMismatchError(f"CustomRoiRequest payload must be {_REQUEST.size} bytes")
            rid, x, y, w, h, flag = _REQUEST.unpack(payload)
            return CustomRoiRequest(rid, RectPx(x, y, w, h), RequestFlag(flag))
        if mtype == MsgType.ACK:
            if len(payload) != _ACK.size:
                raise LengthMismatchError(f"Ack payload must be {_ACK.size} bytes")
            rid, code = _ACK.unpack(payload)
            return Ack(rid, AckCode(code))
        if mtype == MsgType.BYE:
            if payload:
                raise LengthMismatchError("Bye carries no payload")
            return Bye()
    except ValueError as exc:  # enum values, FrameDims/RectPx invariants
        raise LengthMismatchError(str(exc)) from exc
    raise UnknownTypeError(f"unknown message type {mtype}")


def decode(data: bytes | memoryview, offset: int = 0) -> tuple[WireMessage, int]:
    """Decode one message starting at ``offset``; returns (message, bytes consumed).

    Raises a ProtocolError subclass on anything malformed; TruncatedError
    specifically means the prefix so far is valid but incomplete.
    """
    view = bytes(data[offset:]) if offset else bytes(data)
    if len(view) < HEADER.size:
        if MAGIC.startswith(view[:4]):
            raise TruncatedError("incomplete header")
        raise BadMagicError(f"bad magic {view[:4]!r}")
    magic, version, mtype, length = HEADER.unpack_from(view)
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}")
    if version != VERSION:
        raise BadVersionError(f"unsupported version {version}")
    if mtype not in MsgType._value2member_map_:
        raise UnknownTypeError(f"unknown message type {mtype}")
    end = HEADER.size + length
    if len(view) < end:
        raise TruncatedError(f"need {end} bytes, have {len(view)}")
    return _parse_payload(mtype, view[HEADER.size : end]), end


class MessageReader:
    """Incremental decoder over a byte stream with magic-based resync.

    Feed arbitrary chunks; iterate decoded messages. A malformed region is
    skipped by searching for the next magic, counting one resync per skip.
    """

    def __init__(self, max_payload: int = MAX_PAYLOAD):
        self._buf = bytearray()
        self._max_payload = max_payload
        self.resyncs = 0

    def feed(self, data: bytes) -> list[WireMessage]:
        self._buf.extend(data)
        out = []
        while True:
            msg = self._next()
            if msg is None:
                return out
            out.append(msg)

    def _next(self) -> WireMessage | None:
        while True:
            start = self._buf.find(MAGIC)
            if start < 0:
                # keep a tail that could be a magic prefix split across chunks
                del self._buf[: max(0, len(self._buf) - 3)]
                return None
            if start > 0:
                del self._buf[:start]
                self.resyncs += 1
            if len(self._buf) >= HEADER.size:
                length = HEADER.unpack_from(self._buf)[3]
                if length > self._max_payload:
                    del self._buf[:1]
                    self.resyncs += 1
                    continue
            try:
                msg, consumed = decode(self._buf)
            except TruncatedError:
                return None
            except ProtocolError:
                del self._buf[:1]
                self.resyncs += 1
                continue
            del self._buf[:consumed]
            return msg
