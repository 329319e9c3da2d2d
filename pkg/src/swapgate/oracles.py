"""Off-chain oracle network: extraction, quorum, signing, submission.

Each oracle independently reads confirmed port events from the source chain
and turns them into a relay payload. A round succeeds when at least
`threshold` oracles produced byte-identical payloads; the agreeing oracles
sign the payload hash and the lowest-indexed signer enqueues the pulse and
reveal transactions on the target chain. Anything less is a lost round, not
a safety problem: a forged payload needs a full quorum of identical
signatures to ever reach a port.

Byzantine profiles perturb extraction deterministically so that runs stay
replayable:

    silent          extracts nothing and signs nothing
    wrong_amount    doubles every amount
    wrong_receiver  redirects every entry to a fixed attacker address
    replayer        re-emits everything it ever extracted before
    equivocator     endorses both the honest payload and a perturbed twin
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .chain import Chain, ChainEvent, EventKind
from .crypto import sha256
from .encoding import MAX_AMOUNT, Direction, PayloadEntry, encode_payload
from .gateway import PulseTx, SendDataTx
from .nebula import OracleRoster, pulse_message

ATTACKER_ADDRESS = sha256(b"attacker")[:20]


class Behavior(str, Enum):
    HONEST = "honest"
    SILENT = "silent"
    WRONG_AMOUNT = "wrong_amount"
    WRONG_RECEIVER = "wrong_receiver"
    REPLAYER = "replayer"
    EQUIVOCATOR = "equivocator"


@dataclass(frozen=True)
class OracleIdentity:
    index: int
    secret: bytes
    behavior: Behavior


def entry_from_event(event: ChainEvent) -> PayloadEntry:
    direction = (Direction.ORIGIN_TO_DESTINATION
                 if event.kind == EventKind.LOCK_REGISTERED
                 else Direction.DESTINATION_TO_ORIGIN)
    payload = event.payload
    assert event.swap_id is not None
    return PayloadEntry(
        direction=direction,
        swap_id=event.swap_id,
        symbol=payload["symbol"],
        origin_chain=payload["origin_chain"],
        receiver=bytes.fromhex(payload["receiver"]["address"]),
        amount=payload["amount"],
    )


@dataclass
class RoundReport:
    source: int
    target: int
    reference_hash: str | None          # hash of the honest extraction, if any
    candidates: list[dict]              # [{hash, count, forged}]
    outcome: str                        # "submitted" | "no_quorum" | "empty"
    chosen_hash: str | None = None
    forged_chosen: bool = False
    signers: list[int] = field(default_factory=list)
    declared_height: int | None = None
    pulse_id: int | None = None
    entries: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "source": self.source,
            "target": self.target,
            "reference_hash": self.reference_hash,
            "candidates": self.candidates,
            "outcome": self.outcome,
            "chosen_hash": self.chosen_hash,
            "forged_chosen": self.forged_chosen,
            "signers": self.signers,
            "declared_height": self.declared_height,
            "pulse_id": self.pulse_id,
            "entries": self.entries,
        }


class OracleNetwork:
    """The full oracle roster plus its extraction bookkeeping."""

    def __init__(self, oracles: list[OracleIdentity], roster: OracleRoster,
                 confirmation_depth: dict[int, int]):
        if len(oracles) != roster.size:
            raise ValueError("one roster key per oracle required")
        self.oracles = list(oracles)
        self.roster = roster
        self.confirmation_depth = dict(confirmation_depth)
        self.cursors: dict[tuple[int, int], int] = {}
        self.reference_cursors: dict[int, int] = {}
        # replayers accumulate per (oracle, source chain) extraction history
        self.replay_history: dict[tuple[int, int], list[PayloadEntry]] = {}
        self.reattest_requests: set[bytes] = set()

    # --- extraction ---------------------------------------------------------

    def request_reattestation(self, swap_id: bytes) -> None:
        self.reattest_requests.add(swap_id)

    def _confirmed_upper(self, chain: Chain) -> int:
        return chain.canonical_tip.height - self.confirmation_depth[chain.chain_id]

    def _honest_entries(self, chain: Chain, cursor: int) -> tuple[list[PayloadEntry], int]:
        """Confirmed registration events past the cursor, plus any flagged
        re-attestations whose registration is confirmed on this chain."""
        upper = self._confirmed_upper(chain)
        picked: list[tuple[int, int, PayloadEntry]] = []
        seen: set[bytes] = set()
        for event in chain.events_since(cursor):
            if event.block.height > upper:
                break
            if event.kind not in (EventKind.LOCK_REGISTERED,
                                  EventKind.BURN_REGISTERED):
                continue
            entry = entry_from_event(event)
            picked.append((event.block.height, event.index, entry))
            seen.add(entry.swap_id)
        if self.reattest_requests:
            for event in chain.events_since(-1):
                if event.block.height > upper:
                    break
                if event.kind not in (EventKind.LOCK_REGISTERED,
                                      EventKind.BURN_REGISTERED):
                    continue
                if event.swap_id in self.reattest_requests and event.swap_id not in seen:
                    entry = entry_from_event(event)
                    picked.append((event.block.height, event.index, entry))
                    seen.add(entry.swap_id)
        picked.sort(key=lambda item: (item[0], item[1]))
        return [entry for _, _, entry in picked], max(cursor, upper)

    def extract(self, oracle: OracleIdentity, chain: Chain) -> list[list[PayloadEntry]]:
        """One oracle's payload candidates for the current round.

        Honest oracles produce zero or one candidate; the equivocator may
        produce two. The per-oracle cursor always advances to the confirmed
        frontier, extraction being total.
        """
        key = (oracle.index, chain.chain_id)
        cursor = self.cursors.get(key, 0)
        entries, new_cursor = self._honest_entries(chain, cursor)
        self.cursors[key] = new_cursor

        if oracle.behavior == Behavior.SILENT:
            return []
        if oracle.behavior == Behavior.HONEST:
            return [entries] if entries else []
        if oracle.behavior == Behavior.WRONG_AMOUNT:
            if not entries:
                return []
            return [[_with_amount(e, min(e.amount * 2, MAX_AMOUNT)) for e in entries]]
        if oracle.behavior == Behavior.WRONG_RECEIVER:
            if not entries:
                return []
            return [[_with_receiver(e, ATTACKER_ADDRESS) for e in entries]]
        if oracle.behavior == Behavior.REPLAYER:
            history = self.replay_history.setdefault(key, [])
            payload = list(history) + entries
            history.extend(entries)
            return [payload] if payload else []
        if oracle.behavior == Behavior.EQUIVOCATOR:
            if not entries:
                return []
            twin = [_with_amount(e, e.amount + 1 if e.amount < MAX_AMOUNT
                                 else e.amount - 1) for e in entries]
            return [entries, twin]
        raise ValueError(f"unhandled behavior {oracle.behavior}")

    def sign_payload(self, oracle: OracleIdentity, data_hash: bytes,
                     declared_height: int, target_chain: int,
                     own_hashes: set[bytes]) -> bytes | None:
        """Sign the domain-separated pulse message, but only for a payload
        the oracle itself extracted this round."""
        if data_hash not in own_hashes:
            return None
        message = pulse_message(data_hash, declared_height, target_chain)
        return self.roster.scheme.sign(oracle.secret, message)

    # --- one relay round ------------------------------------------------------

    def relay_round(self, source: Chain, target: Chain) -> RoundReport:
        reference_entries, ref_cursor = self._honest_entries(
            source, self.reference_cursors.get(source.chain_id, 0))
        self.reference_cursors[source.chain_id] = ref_cursor
        reference_bytes = (encode_payload(reference_entries)
                           if reference_entries else None)
        reference_hash = sha256(reference_bytes) if reference_bytes else None

        by_payload: dict[bytes, list[PayloadEntry]] = {}
        endorsements: dict[bytes, set[int]] = {}
        per_oracle_hashes: dict[int, set[bytes]] = {}
        for oracle in self.oracles:
            hashes: set[bytes] = set()
            for candidate in self.extract(oracle, source):
                raw = encode_payload(candidate)
                digest = sha256(raw)
                by_payload.setdefault(digest, candidate)
                endorsements.setdefault(digest, set()).add(oracle.index)
                hashes.add(digest)
            per_oracle_hashes[oracle.index] = hashes

        candidates_json = [
            {
                "hash": digest.hex(),
                "count": len(endorsers),
                "forged": digest != reference_hash,
            }
            for digest, endorsers in sorted(
                endorsements.items(),
                key=lambda kv: (-len(kv[1]), kv[0]))
        ]

        report = RoundReport(
            source=source.chain_id,
            target=target.chain_id,
            reference_hash=reference_hash.hex() if reference_hash else None,
            candidates=candidates_json,
            outcome="empty" if not endorsements else "no_quorum",
        )
        if not endorsements:
            return report

        digest, endorsers = min(
            endorsements.items(), key=lambda kv: (-len(kv[1]), kv[0]))
        if len(endorsers) < self.roster.threshold:
            return report

        chosen = by_payload[digest]
        declared_height = target.canonical_tip.height
        signatures: list[tuple[int, bytes]] = []
        for oracle in self.oracles:
            sig = self.sign_payload(oracle, digest, declared_height,
                                    target.chain_id,
                                    per_oracle_hashes[oracle.index])
            if sig is not None:
                signatures.append((oracle.index, sig))

        pending_pulses = sum(1 for tx in target.pending_txs()
                             if isinstance(tx, PulseTx))
        predicted_pulse_id = (target.canonical_state.nebula.next_pulse_id
                              + pending_pulses)
        submitter = min(idx for idx, _ in signatures)
        target.submit(PulseTx(
            chain=target.chain_id,
            data_hash=digest,
            declared_height=declared_height,
            signatures=tuple(signatures),
            submitter=submitter,
        ))
        target.submit(SendDataTx(
            chain=target.chain_id,
            pulse_id=predicted_pulse_id,
            entries=tuple(chosen),
            submitter=submitter,
        ))

        for entry in reference_entries:
            self.reattest_requests.discard(entry.swap_id)

        report.outcome = "submitted"
        report.chosen_hash = digest.hex()
        report.forged_chosen = digest != reference_hash
        report.signers = sorted(idx for idx, _ in signatures)
        report.declared_height = declared_height
        report.pulse_id = predicted_pulse_id
        report.entries = [e.to_json() for e in chosen]
        return report


def _with_amount(entry: PayloadEntry, amount: int) -> PayloadEntry:
    return PayloadEntry(entry.direction, entry.swap_id, entry.symbol,
                        entry.origin_chain, entry.receiver, amount)


def _with_receiver(entry: PayloadEntry, receiver: bytes) -> PayloadEntry:
    return PayloadEntry(entry.direction, entry.swap_id, entry.symbol,
                        entry.origin_chain, receiver, entry.amount)
