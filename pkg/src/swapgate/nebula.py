"""On-chain verification contract for oracle-attested data.

Data reaches a port in two steps. A pulse transaction registers the hash of
a payload together with oracle signatures; the contract checks that every
signature verifies, that enough distinct oracles signed, and that the
declared height falls inside the relevance window. A send-data transaction
then reveals the payload; it is accepted only if its canonical encoding
hashes to the registered commitment, after which each entry is routed to
the local port. A consumed pulse can never be revealed twice.

Signatures bind (data hash, declared height, chain id) so that a signature
collected for one chain or height cannot be replayed on another.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .chain import BlockCtx, EventKind
from .crypto import DEFAULT_SCHEME, SignatureScheme
from .encoding import PayloadEntry, payload_hash
from .errors import (
    AlreadyConsumed,
    DuplicatePulse,
    FutureHeight,
    GatewayError,
    HashMismatch,
    InsufficientSignatures,
    InvalidSignature,
    StaleHeight,
    UnknownPulse,
)


def default_threshold(n: int) -> int:
    """BFT supermajority: floor(2n/3) + 1."""
    return (2 * n) // 3 + 1


@dataclass(frozen=True)
class OracleRoster:
    """Ordered verification keys plus the acceptance threshold."""

    keys: tuple[bytes, ...]
    threshold: int
    scheme: SignatureScheme = DEFAULT_SCHEME

    def __post_init__(self):
        if not 1 <= self.threshold <= len(self.keys):
            raise ValueError(
                f"threshold {self.threshold} out of range for {len(self.keys)} oracles")

    @classmethod
    def with_default_threshold(cls, keys: tuple[bytes, ...],
                               scheme: SignatureScheme = DEFAULT_SCHEME) -> "OracleRoster":
        return cls(keys=keys, threshold=default_threshold(len(keys)), scheme=scheme)

    @property
    def size(self) -> int:
        return len(self.keys)


def pulse_message(data_hash: bytes, declared_height: int, chain_id: int) -> bytes:
    """The exact bytes an oracle signs for one pulse."""
    return data_hash + struct.pack(">Q", declared_height) + struct.pack(">B", chain_id)


def verify_signature(scheme: SignatureScheme, key: bytes, message: bytes,
                     signature: bytes) -> bool:
    return scheme.verify(key, message, signature)


@dataclass
class Pulse:
    pulse_id: int
    data_hash: bytes
    declared_height: int
    signatures: tuple[tuple[int, bytes], ...]
    consumed: bool = False

    @property
    def signers(self) -> tuple[int, ...]:
        return tuple(sorted({idx for idx, _ in self.signatures}))

    def to_json(self) -> dict:
        return {
            "pulse_id": self.pulse_id,
            "data_hash": self.data_hash.hex(),
            "declared_height": self.declared_height,
            "signers": list(self.signers),
            "consumed": self.consumed,
        }


class NebulaState:
    def __init__(self, chain_id: int, roster: OracleRoster, window: int):
        self.chain_id = chain_id
        self.roster = roster
        self.window = window
        self.pulses: dict[int, Pulse] = {}
        self.next_pulse_id = 1
        # data hash -> pulse id, for the registered-and-unconsumed uniqueness rule
        self.unconsumed: dict[bytes, int] = {}

    def submit_pulse(self, ctx: BlockCtx, data_hash: bytes, declared_height: int,
                     signatures: list[tuple[int, bytes]]) -> int:
        message = pulse_message(data_hash, declared_height, self.chain_id)
        signers: set[int] = set()
        for idx, sig in signatures:
            if not 0 <= idx < self.roster.size:
                raise InvalidSignature(f"no oracle at roster index {idx}")
            if not self.roster.scheme.verify(self.roster.keys[idx], message, sig):
                raise InvalidSignature(f"signature from oracle {idx} does not verify")
            signers.add(idx)
        if len(signers) < self.roster.threshold:
            raise InsufficientSignatures(
                f"{len(signers)} distinct signers, threshold {self.roster.threshold}")

        current = ctx.height
        if declared_height > current:
            raise FutureHeight(
                f"declared height {declared_height} beyond current {current}")
        if declared_height < current - self.window:
            raise StaleHeight(
                f"declared height {declared_height} older than window "
                f"{self.window} at height {current}")
        if data_hash in self.unconsumed:
            raise DuplicatePulse(
                f"hash {data_hash.hex()} already registered and unconsumed")

        pulse = Pulse(
            pulse_id=self.next_pulse_id,
            data_hash=data_hash,
            declared_height=declared_height,
            signatures=tuple((idx, sig) for idx, sig in signatures),
        )
        self.next_pulse_id += 1
        self.pulses[pulse.pulse_id] = pulse
        self.unconsumed[data_hash] = pulse.pulse_id
        ctx.emit(EventKind.PULSE_ACCEPTED, None, {
            "pulse_id": pulse.pulse_id,
            "data_hash": data_hash.hex(),
            "declared_height": declared_height,
            "signers": list(pulse.signers),
        })
        return pulse.pulse_id

    def submit_send_data(self, ctx: BlockCtx, pulse_id: int,
                         entries: list[PayloadEntry], router) -> list[str]:
        """Reveal a payload and route it entry by entry.

        router(entry) executes one entry against the local port and raises a
        GatewayError on rejection. A rejected entry is recorded but does not
        roll back its siblings; the pulse is consumed either way.
        """
        pulse = self.pulses.get(pulse_id)
        if pulse is None:
            raise UnknownPulse(f"no pulse {pulse_id}")
        if pulse.consumed:
            raise AlreadyConsumed(f"pulse {pulse_id} already consumed")
        revealed = payload_hash(entries)
        if revealed != pulse.data_hash:
            raise HashMismatch(
                f"payload hashes to {revealed.hex()}, pulse committed to "
                f"{pulse.data_hash.hex()}")

        pulse.consumed = True
        self.unconsumed.pop(pulse.data_hash, None)

        outcomes: list[str] = []
        for entry in entries:
            try:
                router(entry)
                outcomes.append("ok")
            except GatewayError as err:
                outcomes.append(err.code)
        ctx.emit(EventKind.SEND_DATA_CONSUMED, None, {
            "pulse_id": pulse_id,
            "data_hash": pulse.data_hash.hex(),
            "entries": len(entries),
            "outcomes": list(outcomes),
        })
        return outcomes

    def clone(self) -> "NebulaState":
        other = NebulaState(self.chain_id, self.roster, self.window)
        other.pulses = {
            pid: Pulse(p.pulse_id, p.data_hash, p.declared_height,
                       p.signatures, p.consumed)
            for pid, p in self.pulses.items()
        }
        other.next_pulse_id = self.next_pulse_id
        other.unconsumed = dict(self.unconsumed)
        return other

    def summary(self) -> dict:
        return {
            "next_pulse_id": self.next_pulse_id,
            "pulses": {str(pid): p.to_json() for pid, p in sorted(self.pulses.items())},
        }
