"""Canonical byte encoding of relay payloads.

This is the one externally pinned wire format in the system: the hash a
pulse commits to is the SHA-256 of exactly these bytes, so encoding must be
bit-stable and injective. Layout, big-endian throughout:

    u16  entry count (>= 1)
    per entry:
        u8   direction (0 = origin->destination, 1 = destination->origin)
        32B  swap id
        u8   token symbol length, then that many symbol bytes (utf-8)
        u8   origin chain id
        20B  receiver address
        u64  amount
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum

from .crypto import sha256
from .errors import MalformedPayload

SWAP_ID_LEN = 32
ADDRESS_LEN = 20
MAX_AMOUNT = 2**64 - 1


class Direction(IntEnum):
    ORIGIN_TO_DESTINATION = 0
    DESTINATION_TO_ORIGIN = 1

    @property
    def label(self) -> str:
        return "origin_to_destination" if self == 0 else "destination_to_origin"


@dataclass(frozen=True)
class PayloadEntry:
    """One attested swap instruction inside a relay payload."""

    direction: Direction
    swap_id: bytes
    symbol: str
    origin_chain: int
    receiver: bytes
    amount: int

    def validate(self) -> None:
        if len(self.swap_id) != SWAP_ID_LEN:
            raise MalformedPayload(f"swap id must be {SWAP_ID_LEN} bytes")
        if len(self.receiver) != ADDRESS_LEN:
            raise MalformedPayload(f"receiver must be {ADDRESS_LEN} bytes")
        sym = self.symbol.encode("utf-8")
        if not 1 <= len(sym) <= 255:
            raise MalformedPayload("symbol must encode to 1..255 bytes")
        if not 0 <= self.origin_chain <= 255:
            raise MalformedPayload("origin chain id must fit in one byte")
        if not 0 <= self.amount <= MAX_AMOUNT:
            raise MalformedPayload("amount must fit in u64")

    def to_json(self) -> dict:
        return {
            "direction": int(self.direction),
            "swap_id": self.swap_id.hex(),
            "symbol": self.symbol,
            "origin_chain": self.origin_chain,
            "receiver": self.receiver.hex(),
            "amount": self.amount,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PayloadEntry":
        return cls(
            direction=Direction(obj["direction"]),
            swap_id=bytes.fromhex(obj["swap_id"]),
            symbol=obj["symbol"],
            origin_chain=obj["origin_chain"],
            receiver=bytes.fromhex(obj["receiver"]),
            amount=obj["amount"],
        )


def encode_payload(entries: list[PayloadEntry]) -> bytes:
    if not entries:
        raise MalformedPayload("payload must contain at least one entry")
    if len(entries) > 0xFFFF:
        raise MalformedPayload("entry count exceeds u16")
    out = bytearray(struct.pack(">H", len(entries)))
    for entry in entries:
        entry.validate()
        sym = entry.symbol.encode("utf-8")
        out += struct.pack(">B", int(entry.direction))
        out += entry.swap_id
        out += struct.pack(">B", len(sym))
        out += sym
        out += struct.pack(">B", entry.origin_chain)
        out += entry.receiver
        out += struct.pack(">Q", entry.amount)
    return bytes(out)


def decode_payload(data: bytes) -> list[PayloadEntry]:
    """Inverse of encode_payload; rejects trailing or missing bytes."""
    if len(data) < 2:
        raise MalformedPayload("payload shorter than entry count")
    (count,) = struct.unpack_from(">H", data, 0)
    if count == 0:
        raise MalformedPayload("payload must contain at least one entry")
    pos = 2
    entries: list[PayloadEntry] = []
    for _ in range(count):
        try:
            (direction_byte,) = struct.unpack_from(">B", data, pos)
            pos += 1
            swap_id = data[pos:pos + SWAP_ID_LEN]
            if len(swap_id) != SWAP_ID_LEN:
                raise MalformedPayload("truncated swap id")
            pos += SWAP_ID_LEN
            (sym_len,) = struct.unpack_from(">B", data, pos)
            pos += 1
            sym = data[pos:pos + sym_len]
            if len(sym) != sym_len or sym_len == 0:
                raise MalformedPayload("truncated or empty symbol")
            pos += sym_len
            (origin_chain,) = struct.unpack_from(">B", data, pos)
            pos += 1
            receiver = data[pos:pos + ADDRESS_LEN]
            if len(receiver) != ADDRESS_LEN:
                raise MalformedPayload("truncated receiver")
            pos += ADDRESS_LEN
            (amount,) = struct.unpack_from(">Q", data, pos)
            pos += 8
        except struct.error as exc:
            raise MalformedPayload(f"truncated payload: {exc}") from None
        if direction_byte not in (0, 1):
            raise MalformedPayload(f"unknown direction byte {direction_byte}")
        entries.append(PayloadEntry(
            direction=Direction(direction_byte),
            swap_id=swap_id,
            symbol=sym.decode("utf-8"),
            origin_chain=origin_chain,
            receiver=receiver,
            amount=amount,
        ))
    if pos != len(data):
        raise MalformedPayload(f"{len(data) - pos} trailing bytes after last entry")
    return entries


def payload_hash(entries: list[PayloadEntry]) -> bytes:
    return sha256(encode_payload(entries))
