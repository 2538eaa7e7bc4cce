"""Pulse frame wire format. All fields big-endian.

    header  magic "PLSE" | version u8 | flags u8 | sequence u16
    record  timestamp u32 (ticks) | source u16 | weight u8 | pad u8

One frame fills one UDP datagram, so the record count is the payload
length over the record size: at most 180 records. A weight above 63 makes
the whole frame malformed.
"""

import struct

from collections.abc import Sequence
from dataclasses import dataclass

from scneuro.constants import MAX_EVENTS_PER_FRAME, PULSE_MAGIC, PULSE_VERSION
from scneuro.core import SpikeEvent
from scneuro.exceptions import (
    BadMagicError,
    FrameTooLargeError,
    TruncatedFrameError,
    VersionMismatchError,
    WeightOutOfRangeError,
)

HEADER = struct.Struct(">4sBBH")
RECORD = struct.Struct(">IHBx")
MAX_TIMESTAMP = (1 << 32) - 1
MAX_SOURCE = (1 << 16) - 1


@dataclass(frozen=True, slots=True)
class PulseFrame:
    sequence: int
    events: tuple[SpikeEvent, ...]
    flags: int = 0


def encode_frame(events: Sequence[SpikeEvent], sequence: int = 0, flags: int = 0) -> bytes:
    if len(events) > MAX_EVENTS_PER_FRAME:
        raise FrameTooLargeError(
            f"{len(events)} events exceed the frame limit of {MAX_EVENTS_PER_FRAME}"
        )
    if not 0 <= sequence < 1 << 16:
        raise ValueError(f"Sequence number {sequence} does not fit 16 bits")
    parts = [HEADER.pack(PULSE_MAGIC, PULSE_VERSION, flags, sequence)]
    try:
        parts.extend(RECORD.pack(e.time, e.source, e.weight) for e in events)
    except struct.error as exc:
        raise ValueError(f"Event does not fit the wire format: {exc}") from exc
    return b"".join(parts)


def decode_frame(data: bytes) -> PulseFrame:
    """Parse one datagram. A malformed frame raises and yields no events."""
    if len(data) < HEADER.size:
        raise TruncatedFrameError(f"Frame of {len(data)} bytes is shorter than its header")
    magic, version, flags, sequence = HEADER.unpack_from(data)
    if magic != PULSE_MAGIC:
        raise BadMagicError(f"Bad magic {magic!r}")
    if version != PULSE_VERSION:
        raise VersionMismatchError(f"Frame version {version}, expected {PULSE_VERSION}")
    count, partial = divmod(len(data) - HEADER.size, RECORD.size)
    if partial:
        raise TruncatedFrameError(f"Frame ends {RECORD.size - partial} bytes into a record")
    if count > MAX_EVENTS_PER_FRAME:
        raise FrameTooLargeError(f"Frame holds {count} events, limit {MAX_EVENTS_PER_FRAME}")
    try:
        events = tuple(
            SpikeEvent(time, source, weight)
            for time, source, weight in RECORD.iter_unpack(data[HEADER.size :])
        )
    except ValueError as exc:
        raise WeightOutOfRangeError(str(exc)) from exc
    return PulseFrame(sequence=sequence, events=events, flags=flags)
