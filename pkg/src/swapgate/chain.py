"""Deterministic single-process blockchain simulator.

A Chain owns a block tree, named branches, a pending transaction queue and
one embedded state snapshot per block. Contract logic is injected as an
``apply_tx`` callable so the block machinery stays independent of what the
transactions mean. Everything is driven externally: blocks exist only when
someone calls produce_block, heights are the only notion of time.

Canonical-branch rule: longest branch wins; equal heights are broken by the
lexicographically smallest tip hash, then by branch creation order (which
only matters when two branches point at the very same block).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Protocol

from .crypto import json_digest, sha256
from .errors import GatewayError, HeightBeyondTip, UnknownBranch

GENESIS_PARENT = bytes(32)


class EventKind(str, Enum):
    LOCK_REGISTERED = "LockRegistered"
    BURN_REGISTERED = "BurnRegistered"
    MINT_EXECUTED = "MintExecuted"
    UNLOCK_EXECUTED = "UnlockExecuted"
    PULSE_ACCEPTED = "PulseAccepted"
    SEND_DATA_CONSUMED = "SendDataConsumed"


EXECUTION_KINDS = frozenset({EventKind.MINT_EXECUTED, EventKind.UNLOCK_EXECUTED})
REGISTRATION_KINDS = frozenset({EventKind.LOCK_REGISTERED, EventKind.BURN_REGISTERED})


@dataclass(frozen=True)
class BlockRef:
    chain: int
    branch: str
    height: int
    block_hash: bytes

    def to_json(self) -> dict:
        return {
            "chain": self.chain,
            "branch": self.branch,
            "height": self.height,
            "hash": self.block_hash.hex(),
        }


@dataclass(frozen=True)
class ChainEvent:
    kind: EventKind
    swap_id: bytes | None
    block: BlockRef
    index: int
    payload: dict

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "swap_id": self.swap_id.hex() if self.swap_id else None,
            "block": self.block.to_json(),
            "index": self.index,
            "payload": self.payload,
        }


@dataclass
class TxReceipt:
    tx: Any
    status: str               # "ok" or an error code
    detail: str | None = None
    extra: dict | None = None  # e.g. per-entry outcomes of a reveal tx

    def to_json(self) -> dict:
        out = {"tx": self.tx.describe(), "status": self.status}
        if self.detail:
            out["detail"] = self.detail
        if self.extra:
            out.update(self.extra)
        return out


@dataclass
class Block:
    ref: BlockRef
    parent_hash: bytes
    receipts: list[TxReceipt]
    events: list[ChainEvent]

    def to_json(self) -> dict:
        return {
            "chain": self.ref.chain,
            "branch": self.ref.branch,
            "height": self.ref.height,
            "hash": self.ref.block_hash.hex(),
            "parent": self.parent_hash.hex(),
            "txs": [r.to_json() for r in self.receipts],
            "events": [e.to_json() for e in self.events],
        }


@dataclass(frozen=True)
class ReorgInfo:
    old_tip: BlockRef
    new_tip: BlockRef
    fork_height: int

    @property
    def abandoned_depth(self) -> int:
        return self.old_tip.height - self.fork_height


class EmbeddedState(Protocol):
    def clone(self) -> "EmbeddedState": ...

    def summary(self) -> dict: ...


class BlockCtx:
    """Per-block application context handed to contract code."""

    def __init__(self, block_ref: BlockRef):
        self.block_ref = block_ref
        self.events: list[ChainEvent] = []

    @property
    def height(self) -> int:
        return self.block_ref.height

    def emit(self, kind: EventKind, swap_id: bytes | None, payload: dict) -> ChainEvent:
        event = ChainEvent(kind, swap_id, self.block_ref, len(self.events), payload)
        self.events.append(event)
        return event


def block_hash(parent_hash: bytes, height: int, tx_digests: list[bytes]) -> bytes:
    material = parent_hash + struct.pack(">Q", height)
    for d in tx_digests:
        material += d
    return sha256(material)


ApplyTx = Callable[[Any, Any, BlockCtx], dict | None]


class Chain:
    """One simulated blockchain with fork/reorg support.

    apply_tx(state, tx, ctx) mutates state in place and emits events via
    ctx; it raises GatewayError to reject the transaction. Rejected
    transactions are still included in the block, marked with the error
    code, and leave state untouched (the whole per-tx mutation is rolled
    back from a snapshot).
    """

    def __init__(self, chain_id: int, genesis_state: Any, apply_tx: ApplyTx,
                 self_check: bool = True):
        self.chain_id = chain_id
        self._apply_tx = apply_tx
        self.self_check = self_check
        self._genesis_state = genesis_state.clone()

        genesis_digest = sha256(b"genesis" + struct.pack(">B", chain_id))
        g_hash = block_hash(GENESIS_PARENT, 0, [genesis_digest])
        g_ref = BlockRef(chain_id, "main", 0, g_hash)
        genesis = Block(g_ref, GENESIS_PARENT, [], [])

        self.blocks: dict[bytes, Block] = {g_hash: genesis}
        self.states: dict[bytes, Any] = {g_hash: genesis_state.clone()}
        self.branches: dict[str, bytes] = {"main": g_hash}
        self._branch_order: list[str] = ["main"]
        self.pending: list[Any] = []
        self._fork_seq = 0
        self._canonical_cache: tuple[bytes, list[Block]] | None = None
        self.last_reorg: ReorgInfo | None = None
        self._recompute_canonical()

    # --- transaction queue -------------------------------------------------

    def submit(self, tx: Any) -> None:
        self.pending.append(tx)

    def pending_txs(self) -> tuple:
        return tuple(self.pending)

    # --- block production --------------------------------------------------

    def produce_block(self, branch: str = "main") -> BlockRef:
        if branch not in self.branches:
            raise UnknownBranch(f"chain {self.chain_id} has no branch {branch!r}")
        parent_hash = self.branches[branch]
        parent = self.blocks[parent_hash]
        height = parent.ref.height + 1

        txs = self.pending
        self.pending = []
        digests = [json_digest(tx.describe()) for tx in txs]
        new_hash = block_hash(parent_hash, height, digests)
        ref = BlockRef(self.chain_id, branch, height, new_hash)

        state = self.states[parent_hash].clone()
        ctx = BlockCtx(ref)
        receipts: list[TxReceipt] = []
        for tx in txs:
            snapshot = state.clone()
            events_mark = len(ctx.events)
            try:
                extra = self._apply_tx(state, tx, ctx)
                receipts.append(TxReceipt(tx, "ok", extra=extra))
            except GatewayError as err:
                state = snapshot
                del ctx.events[events_mark:]
                receipts.append(TxReceipt(tx, err.code, detail=str(err)))

        block = Block(ref, parent_hash, receipts, ctx.events)
        self.blocks[new_hash] = block
        self.states[new_hash] = state
        self.branches[branch] = new_hash
        self._recompute_canonical()
        return ref

    def fork_at(self, height: int, name: str | None = None) -> str:
        """Create a branch rooted at the canonical block at `height`."""
        tip = self.canonical_tip
        if height > tip.height:
            raise HeightBeyondTip(
                f"fork height {height} beyond canonical tip {tip.height}")
        base = self.canonical_chain()[height]
        if name is None:
            self._fork_seq += 1
            name = f"fork{self._fork_seq}"
        if name in self.branches:
            raise UnknownBranch(f"branch name {name!r} already in use")
        self.branches[name] = base.ref.block_hash
        self._branch_order.append(name)
        return name

    def extend(self, branch: str, count: int) -> list[BlockRef]:
        return [self.produce_block(branch) for _ in range(count)]

    # --- canonical selection -----------------------------------------------

    def _recompute_canonical(self) -> None:
        prev_tip = getattr(self, "_canonical_tip", None)
        best = None
        for name in self._branch_order:
            tip_hash = self.branches[name]
            height = self.blocks[tip_hash].ref.height
            key = (-height, tip_hash)
            if best is None or key < best[0]:
                best = (key, name, tip_hash)
        assert best is not None
        _, name, tip_hash = best
        block = self.blocks[tip_hash]
        self._canonical_tip = BlockRef(self.chain_id, name, block.ref.height, tip_hash)
        self._canonical_cache = None

        self.last_reorg = None
        if prev_tip is not None and prev_tip.block_hash != tip_hash:
            if not self._is_ancestor(prev_tip.block_hash, tip_hash):
                fork_height = self._common_ancestor_height(
                    prev_tip.block_hash, tip_hash)
                self.last_reorg = ReorgInfo(prev_tip, self._canonical_tip, fork_height)
                if self.self_check:
                    self._verify_replay()

    @property
    def canonical_tip(self) -> BlockRef:
        return self._canonical_tip

    @property
    def canonical_branch(self) -> str:
        return self._canonical_tip.branch

    def canonical_chain(self) -> list[Block]:
        """Blocks from genesis to the canonical tip, inclusive."""
        tip_hash = self._canonical_tip.block_hash
        if self._canonical_cache and self._canonical_cache[0] == tip_hash:
            return self._canonical_cache[1]
        chain: list[Block] = []
        cursor = tip_hash
        while True:
            block = self.blocks[cursor]
            chain.append(block)
            if block.parent_hash == GENESIS_PARENT:
                break
            cursor = block.parent_hash
        chain.reverse()
        self._canonical_cache = (tip_hash, chain)
        return chain

    def is_canonical(self, block_ref: BlockRef) -> bool:
        chain = self.canonical_chain()
        if block_ref.height >= len(chain):
            return False
        return chain[block_ref.height].ref.block_hash == block_ref.block_hash

    def _is_ancestor(self, ancestor_hash: bytes, descendant_hash: bytes) -> bool:
        cursor = descendant_hash
        target_height = self.blocks[ancestor_hash].ref.height
        while True:
            block = self.blocks[cursor]
            if block.ref.height < target_height:
                return False
            if cursor == ancestor_hash:
                return True
            if block.parent_hash == GENESIS_PARENT and block.ref.height == 0:
                return False
            cursor = block.parent_hash

    def _common_ancestor_height(self, a: bytes, b: bytes) -> int:
        ancestors_a = set()
        cursor = a
        while True:
            ancestors_a.add(cursor)
            block = self.blocks[cursor]
            if block.parent_hash == GENESIS_PARENT:
                break
            cursor = block.parent_hash
        cursor = b
        while cursor not in ancestors_a:
            cursor = self.blocks[cursor].parent_hash
        return self.blocks[cursor].ref.height

    # --- queries ------------------------------------------------------------

    @property
    def canonical_state(self) -> Any:
        return self.states[self._canonical_tip.block_hash]

    def confirmations(self, event: ChainEvent) -> int | None:
        """Depth of the event's block under the canonical tip; None when the
        block is not on the canonical branch."""
        if not self.is_canonical(event.block):
            return None
        return self._canonical_tip.height - event.block.height

    def events_since(self, cursor: int) -> list[ChainEvent]:
        """Canonical events above `cursor`, in (height, intra-block) order."""
        out: list[ChainEvent] = []
        for block in self.canonical_chain():
            if block.ref.height <= cursor:
                continue
            out.extend(block.events)
        return out

    def canonical_events(self) -> list[ChainEvent]:
        return self.events_since(-1)

    # --- replay oracle -------------------------------------------------------

    def replay_canonical(self) -> Any:
        """Re-derive the canonical tip state by applying every canonical
        block's transactions against a fresh genesis state."""
        state = self._genesis_state.clone()
        for block in self.canonical_chain():
            if block.ref.height == 0:
                continue
            ctx = BlockCtx(block.ref)
            for receipt in block.receipts:
                snapshot = state.clone()
                try:
                    self._apply_tx(state, receipt.tx, ctx)
                except GatewayError:
                    state = snapshot
        return state

    def _verify_replay(self) -> None:
        replayed = json_digest(self.replay_canonical().summary())
        incremental = json_digest(self.canonical_state.summary())
        if replayed != incremental:
            raise RuntimeError(
                f"chain {self.chain_id}: canonical replay diverged from "
                f"incremental state after reorg")
