"""Share header and byte-level payload primitives.

Header layout, big-endian, 15 bytes::

    version u8 | cycle u32 | sender u16 | policy u8 | representation u8 | partition u16 | count u32

Payload fields are unsigned big-endian integers, each rounded up to whole
bytes: identifiers use ``ceil(bits_mid/8)``, column indices ``ceil(bits_w/8)``,
in-batch counts ``ceil(bits_B/8)`` and full-share counters ``ceil(bits_N/8)``.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass

WIRE_VERSION = 1
HEADER = struct.Struct(">BIHBBHI")


class WireError(ValueError):
    pass


class MalformedShareError(WireError):
    pass


class VersionMismatchError(WireError):
    pass


class Policy(enum.IntEnum):
    FULL = 0
    INCREMENTAL = 1
    ALIVE = 2


class RepTag(enum.IntEnum):
    NONE = 0
    ITEM_BUFF = 1
    CNT_BUFF = 2
    FLW_HASH = 3
    CNT_HASH = 4
    CNT_DIFF = 5


@dataclass(frozen=True)
class Share:
    cycle: int
    sender: int
    policy: Policy
    rep: RepTag
    partition: int
    count: int
    payload: bytes = b""
    version: int = WIRE_VERSION

    def __post_init__(self) -> None:
        if self.policy is Policy.ALIVE and (self.payload or self.count):
            raise MalformedShareError("alive shares carry no payload")

    def to_bytes(self) -> bytes:
        head = HEADER.pack(
            self.version, self.cycle, self.sender, self.policy, self.rep, self.partition, self.count
        )
        return head + self.payload

    @classmethod
    def from_bytes(cls, data: bytes) -> Share:
        if len(data) < HEADER.size:
            raise MalformedShareError(f"share shorter than its {HEADER.size}-byte header")
        version, cycle, sender, policy, rep, partition, count = HEADER.unpack_from(data)
        if version != WIRE_VERSION:
            raise VersionMismatchError(f"wire version {version}, expected {WIRE_VERSION}")
        try:
            policy, rep = Policy(policy), RepTag(rep)
        except ValueError as exc:
            raise MalformedShareError(str(exc)) from None
        return cls(cycle, sender, policy, rep, partition, count, bytes(data[HEADER.size :]), version)

    @property
    def header_bits(self) -> int:
        return HEADER.size * 8


class Writer:
    def __init__(self) -> None:
        self._buf = bytearray()

    def put(self, value: int, nbytes: int) -> None:
        try:
            self._buf += value.to_bytes(nbytes, "big")
        except OverflowError:
            raise WireError(f"value {value} does not fit {nbytes} bytes") from None

    def put_many(self, values, nbytes: int) -> None:
        try:
            self._buf += b"".join(v.to_bytes(nbytes, "big") for v in values)
        except OverflowError:
            raise WireError(f"a value does not fit {nbytes} bytes") from None

    def getvalue(self) -> bytes:
        return bytes(self._buf)


class Reader:
    def __init__(self, data: bytes) -> None:
        self._data, self._pos = data, 0

    def take(self, nbytes: int) -> int:
        end = self._pos + nbytes
        if end > len(self._data):
            raise MalformedShareError("payload ends mid-field")
        value = int.from_bytes(self._data[self._pos : end], "big")
        self._pos = end
        return value

    def take_many(self, n: int, nbytes: int) -> list[int]:
        end = self._pos + n * nbytes
        if end > len(self._data):
            raise MalformedShareError("payload ends mid-field")
        data, start = self._data, self._pos
        self._pos = end
        return [int.from_bytes(data[i : i + nbytes], "big") for i in range(start, end, nbytes)]

    def finish(self) -> None:
        if self._pos != len(self._data):
            raise MalformedShareError(f"{len(self._data) - self._pos} trailing payload bytes")
