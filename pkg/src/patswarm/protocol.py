"""Binary command/telemetry frames exchanged between the swarm server, bots and tracker.

Frame = 10-byte header + payload, all integers little-endian::

    offset  size  field
    0       2     magic 0x41 0x42
    2       1     version (1)
    3       1     msg_type
    4       1     bot_id
    5       1     flags (0)
    6       2     seq (u16)
    8       2     payload_len (u16)

Payloads (fixed-point: positions in 0.1 mm, angles in 0.01 deg):

    type  name           payload                                         bytes
    1     MoveTo         x i32, y i32, yaw i16, speed u16 (mm/s)         12
    2     SetHinge       target u16 (0..9000)                            2
    3     Dispense       count u8                                        1
    4     AcousticFrame  frame_id u16, 64 x (phase u8, amplitude u8)    130
    5     Stop           -                                               0
    6     PoseReport     source_id u8, x/y/z i32, yaw i16, t_ms u32      19
    7     Ack            acked_seq u16, status u8                        3

A MoveTo yaw of -32768 means "no heading constraint".
"""

from __future__ import annotations

import enum
import math
import struct
from dataclasses import dataclass
from typing import ClassVar, Union

import numpy as np

from .acoustics.array import DriveState

MAGIC = b"\x41\x42"
VERSION = 1
HEADER = struct.Struct("<2sBBBBHH")
HEADER_SIZE = HEADER.size
N_ELEMENTS = 64
YAW_FREE = -32768

assert HEADER_SIZE == 10


class DecodeError(enum.IntEnum):
    BAD_MAGIC = 1
    BAD_VERSION = 2
    UNKNOWN_TYPE = 3
    LENGTH_MISMATCH = 4
    TRUNCATED = 5
    BAD_FIELD = 6


class CodecError(ValueError):
    def __init__(self, code: DecodeError, detail: str):
        self.code = code
        super().__init__(f"{code.name}: {detail}")


class EncodeError(ValueError):
    """A message field is outside its wire range."""


_RANGES = {
    "i32": (-(2**31), 2**31 - 1),
    "i16": (-(2**15), 2**15 - 1),
    "u32": (0, 2**32 - 1),
    "u16": (0, 2**16 - 1),
    "u8": (0, 255),
}


def _check(name, value, kind, lo=None, hi=None):
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise EncodeError(f"{name} must be an integer, got {value!r}")
    a, b = _RANGES[kind]
    if lo is not None:
        a = max(a, lo)
    if hi is not None:
        b = min(b, hi)
    if not a <= value <= b:
        raise EncodeError(f"{name}={value} outside [{a}, {b}]")


def _to_dmm(metres: float) -> int:
    return int(round(metres * 10_000.0))


def _to_cdeg(rad: float) -> int:
    return int(round(math.degrees(rad) * 100.0))


@dataclass(frozen=True)
class MoveTo:
    x: int  # 0.1 mm
    y: int
    yaw: int  # 0.01 deg, YAW_FREE = unconstrained
    speed: int  # mm/s, speed of a moving goal (0 = static waypoint)

    TYPE: ClassVar[int] = 1
    FMT: ClassVar[struct.Struct] = struct.Struct("<iihH")

    def validate(self):
        _check("x", self.x, "i32")
        _check("y", self.y, "i32")
        _check("yaw", self.yaw, "i16")
        _check("speed", self.speed, "u16")

    def fields(self):
        return (self.x, self.y, self.yaw, self.speed)

    @classmethod
    def from_si(cls, x: float, y: float, yaw: float | None, speed: float = 0.0):
        yaw_w = YAW_FREE if yaw is None else _to_cdeg(math.remainder(yaw, 2 * math.pi))
        if yaw_w == 18000:
            yaw_w = -18000
        return cls(_to_dmm(x), _to_dmm(y), yaw_w, int(round(speed * 1000.0)))

    @property
    def position_m(self):
        return self.x / 10_000.0, self.y / 10_000.0

    @property
    def yaw_rad(self):
        return None if self.yaw == YAW_FREE else math.radians(self.yaw / 100.0)

    @property
    def speed_mps(self):
        return self.speed / 1000.0


@dataclass(frozen=True)
class SetHinge:
    target: int  # 0.01 deg

    TYPE: ClassVar[int] = 2
    FMT: ClassVar[struct.Struct] = struct.Struct("<H")

    def validate(self):
        _check("target", self.target, "u16", 0, 9000)

    def fields(self):
        return (self.target,)

    @classmethod
    def from_degrees(cls, deg: float):
        return cls(int(round(deg * 100.0)))

    @property
    def degrees(self):
        return self.target / 100.0


@dataclass(frozen=True)
class Dispense:
    count: int

    TYPE: ClassVar[int] = 3
    FMT: ClassVar[struct.Struct] = struct.Struct("<B")

    def validate(self):
        _check("count", self.count, "u8")

    def fields(self):
        return (self.count,)


@dataclass(frozen=True)
class AcousticFrame:
    frame_id: int
    phases: tuple  # 64 levels, 256 per cycle
    amplitudes: tuple  # 64 levels, 255 = full

    TYPE: ClassVar[int] = 4
    FMT: ClassVar[struct.Struct] = struct.Struct("<H" + "B" * (2 * N_ELEMENTS))

    def __post_init__(self):
        object.__setattr__(self, "phases", tuple(int(v) for v in self.phases))
        object.__setattr__(self, "amplitudes", tuple(int(v) for v in self.amplitudes))

    def validate(self):
        _check("frame_id", self.frame_id, "u16")
        if len(self.phases) != N_ELEMENTS or len(self.amplitudes) != N_ELEMENTS:
            raise EncodeError(f"AcousticFrame needs exactly {N_ELEMENTS} phase/amplitude pairs")
        if 0 <= min(self.phases + self.amplitudes) and max(self.phases + self.amplitudes) <= 255:
            return
        for i, (p, a) in enumerate(zip(self.phases, self.amplitudes)):  # locate the bad entry
            _check(f"phase[{i}]", p, "u8")
            _check(f"amplitude[{i}]", a, "u8")

    def fields(self):
        out = [self.frame_id]
        for p, a in zip(self.phases, self.amplitudes):
            out += (p, a)
        return tuple(out)

    @classmethod
    def _from_fields(cls, values):
        return cls(values[0], values[1::2], values[2::2])

    @classmethod
    def from_drive(cls, frame_id: int, drive: DriveState):
        q = quantize_drive(drive)
        return cls(frame_id, q.phase_levels, q.amp_levels)

    def drive(self) -> DriveState:
        return dequantize_drive(QuantizedDrive(self.phases, self.amplitudes))


@dataclass(frozen=True)
class Stop:
    TYPE: ClassVar[int] = 5
    FMT: ClassVar[struct.Struct] = struct.Struct("<")

    def validate(self):
        pass

    def fields(self):
        return ()


@dataclass(frozen=True)
class PoseReport:
    source_id: int
    x: int  # 0.1 mm
    y: int
    z: int
    yaw: int  # 0.01 deg
    timestamp: int  # ms

    TYPE: ClassVar[int] = 6
    FMT: ClassVar[struct.Struct] = struct.Struct("<BiiihI")

    def validate(self):
        _check("source_id", self.source_id, "u8")
        for n in ("x", "y", "z"):
            _check(n, getattr(self, n), "i32")
        _check("yaw", self.yaw, "i16")
        _check("timestamp", self.timestamp, "u32")

    def fields(self):
        return (self.source_id, self.x, self.y, self.z, self.yaw, self.timestamp)

    @classmethod
    def from_si(cls, source_id, x, y, z, yaw, t):
        yaw_w = _to_cdeg(math.remainder(yaw, 2 * math.pi))
        if yaw_w == 18000:
            yaw_w = -18000
        return cls(source_id, _to_dmm(x), _to_dmm(y), _to_dmm(z), yaw_w, int(round(t * 1000.0)) % 2**32)

    @property
    def position_m(self):
        return self.x / 10_000.0, self.y / 10_000.0, self.z / 10_000.0

    @property
    def yaw_rad(self):
        return math.radians(self.yaw / 100.0)

    @property
    def time_s(self):
        return self.timestamp / 1000.0


@dataclass(frozen=True)
class Ack:
    acked_seq: int
    status: int

    TYPE: ClassVar[int] = 7
    FMT: ClassVar[struct.Struct] = struct.Struct("<HB")

    RECEIVED: ClassVar[int] = 0
    DONE: ClassVar[int] = 1
    REJECTED: ClassVar[int] = 2

    def validate(self):
        _check("acked_seq", self.acked_seq, "u16")
        _check("status", self.status, "u8")

    def fields(self):
        return (self.acked_seq, self.status)


Message = Union[MoveTo, SetHinge, Dispense, AcousticFrame, Stop, PoseReport, Ack]
MESSAGE_TYPES = {cls.TYPE: cls for cls in (MoveTo, SetHinge, Dispense, AcousticFrame, Stop, PoseReport, Ack)}
PAYLOAD_SIZES = {t: cls.FMT.size for t, cls in MESSAGE_TYPES.items()}


@dataclass(frozen=True)
class WireHeader:
    msg_type: int
    bot_id: int
    seq: int
    payload_len: int
    version: int = VERSION
    flags: int = 0


def encode(msg: Message, bot_id: int, seq: int) -> bytes:
    """Serialise ``msg``; every field is range-checked before any byte is produced."""
    _check("bot_id", bot_id, "u8")
    _check("seq", seq, "u16")
    msg.validate()
    payload = msg.FMT.pack(*msg.fields())
    return HEADER.pack(MAGIC, VERSION, msg.TYPE, bot_id, 0, seq, len(payload)) + payload


def decode_header(data: bytes) -> WireHeader:
    if len(data) < 2:
        if data[:1] not in (b"", MAGIC[:1]):
            raise CodecError(DecodeError.BAD_MAGIC, f"first byte 0x{data[0]:02x}")
        raise CodecError(DecodeError.TRUNCATED, f"{len(data)} bytes, header needs {HEADER_SIZE}")
    if data[:2] != MAGIC:
        raise CodecError(DecodeError.BAD_MAGIC, f"got {bytes(data[:2]).hex()}")
    if len(data) < HEADER_SIZE:
        raise CodecError(DecodeError.TRUNCATED, f"{len(data)} bytes, header needs {HEADER_SIZE}")
    _, version, msg_type, bot_id, flags, seq, plen = HEADER.unpack_from(data, 0)
    if version != VERSION:
        raise CodecError(DecodeError.BAD_VERSION, f"version {version}")
    if msg_type not in MESSAGE_TYPES:
        raise CodecError(DecodeError.UNKNOWN_TYPE, f"msg_type {msg_type}")
    if flags != 0:
        raise CodecError(DecodeError.BAD_FIELD, f"flags 0x{flags:02x} must be 0")
    return WireHeader(msg_type, bot_id, seq, plen, version, flags)


def decode(data: bytes) -> tuple[Message, WireHeader]:
    """Parse one frame; raises CodecError with a distinct code per failure class."""
    data = bytes(data)
    header = decode_header(data)
    expected = PAYLOAD_SIZES[header.msg_type]
    if header.payload_len != expected:
        raise CodecError(
            DecodeError.LENGTH_MISMATCH,
            f"payload_len {header.payload_len} for type {header.msg_type}, expected {expected}",
        )
    available = len(data) - HEADER_SIZE
    if available < header.payload_len:
        raise CodecError(
            DecodeError.TRUNCATED, f"payload has {available} of {header.payload_len} bytes"
        )
    if available > header.payload_len:
        raise CodecError(
            DecodeError.LENGTH_MISMATCH, f"{available - header.payload_len} trailing bytes"
        )
    cls = MESSAGE_TYPES[header.msg_type]
    values = cls.FMT.unpack_from(data, HEADER_SIZE)
    msg = cls._from_fields(values) if cls is AcousticFrame else cls(*values)
    try:
        msg.validate()
    except EncodeError as exc:
        raise CodecError(DecodeError.BAD_FIELD, str(exc)) from exc
    return msg, header


@dataclass(frozen=True)
class QuantizedDrive:
    phase_levels: tuple
    amp_levels: tuple


def quantize_drive(drive: DriveState) -> QuantizedDrive:
    ph = np.floor(drive.phases / (2 * np.pi) * 256.0 + 0.5).astype(int) % 256
    amp = np.floor(drive.amplitudes * 255.0 + 0.5).astype(int)
    return QuantizedDrive(tuple(int(v) for v in ph), tuple(int(v) for v in amp))


def dequantize_drive(q: QuantizedDrive) -> DriveState:
    ph = np.asarray(q.phase_levels, dtype=float) * (2 * np.pi / 256.0)
    amp = np.asarray(q.amp_levels, dtype=float) / 255.0
    return DriveState(ph, amp)


def accept_sequence(last_seen: int | None, incoming: int) -> bool:
    """16-bit serial-number check: accept only frames strictly ahead within half the space."""
    if last_seen is None:
        return True
    delta = (incoming - last_seen) % 65536
    return 0 < delta < 32768


class SequenceTracker:
    """Per-peer last accepted sequence number, owned by one receiver."""

    def __init__(self):
        self._last: dict = {}
        self.stale = 0

    def accept(self, peer, seq: int) -> bool:
        if accept_sequence(self._last.get(peer), seq):
            self._last[peer] = seq
            return True
        self.stale += 1
        return False


class SequenceCounter:
    """Outgoing u16 sequence per destination, wrapping at 2^16."""

    def __init__(self):
        self._next: dict = {}

    def next(self, peer) -> int:
        s = self._next.get(peer, 0)
        self._next[peer] = (s + 1) % 65536
        return s
