"""Block production, forks, reorgs, canonical selection, replay oracle."""

import pytest

from swapgate import EventKind, LockTx, TransferTx
from swapgate.crypto import json_digest
from swapgate.errors import HeightBeyondTip, UnknownBranch

from conftest import ALICE, BOB, CAROL, World

from reference_codec import ref_block_hash


def lock_tx(amount=100, sender=ALICE, receiver=BOB):
    return LockTx(0, sender, "T", amount, receiver)


def test_empty_block_on_genesis(world):
    ref = world.origin.produce_block()
    assert ref.height == 1
    before = world.origin.states[world.origin.canonical_chain()[0].ref.block_hash]
    assert world.origin.canonical_state.ledger.summary() == before.ledger.summary()


def test_lock_tx_emits_event(world):
    world.origin.submit(lock_tx())
    ref = world.origin.produce_block()
    block = world.origin.blocks[ref.block_hash]
    assert [e.kind for e in block.events] == [EventKind.LOCK_REGISTERED]
    assert block.receipts[0].status == "ok"
    assert world.origin.canonical_state.ledger.locked["T"] == 100


def test_failed_tx_recorded_with_marker(world):
    world.origin.submit(lock_tx(amount=10**9))  # more than alice holds
    ref = world.origin.produce_block()
    block = world.origin.blocks[ref.block_hash]
    assert block.receipts[0].status == "InsufficientBalance"
    assert block.events == []
    assert world.origin.canonical_state.ledger.locked == {}


def test_block_hash_matches_reference(world):
    world.origin.submit(lock_tx())
    ref = world.origin.produce_block()
    block = world.origin.blocks[ref.block_hash]
    digests = [json_digest(r.tx.describe()) for r in block.receipts]
    assert ref.block_hash == ref_block_hash(block.parent_hash, 1, digests)


def test_tie_break_smallest_hash_both_orders():
    """Two equal-length branches: the lexicographically smaller tip hash wins,
    no matter which branch produced last."""
    outcomes = []
    for order in ((40, 70), (70, 40)):
        w = World()
        w.origin.produce_block()
        fork = w.origin.fork_at(1, "rival")
        w.origin.submit(lock_tx(amount=order[0]))
        w.origin.produce_block("main")
        w.origin.submit(lock_tx(amount=order[1]))
        w.origin.produce_block(fork)
        tips = {name: w.origin.blocks[h].ref
                for name, h in w.origin.branches.items()}
        assert tips["main"].height == tips["rival"].height == 2
        expected = min(tips.values(), key=lambda r: r.block_hash)
        assert w.origin.canonical_tip.block_hash == expected.block_hash
        outcomes.append(w.origin.canonical_branch)
    # both orderings agree on a winner determined by hash, not recency
    assert set(outcomes) <= {"main", "rival"}


def test_fork_at_tip_is_canonical_prefix(world):
    world.origin.produce_block()
    world.origin.produce_block()
    name = world.origin.fork_at(2, "twin")
    assert world.origin.branches[name] == world.origin.canonical_tip.block_hash
    assert world.origin.canonical_branch == "main"


def test_fork_beyond_tip(world):
    with pytest.raises(HeightBeyondTip):
        world.origin.fork_at(5)


def test_unknown_branch(world):
    with pytest.raises(UnknownBranch):
        world.origin.produce_block("nope")


def test_reorg_switches_canonical_and_drops_events(world):
    world.origin.submit(lock_tx())
    world.origin.produce_block()          # h1 with lock
    event = world.origin.canonical_events()[0]
    assert world.origin.confirmations(event) == 0

    fork = world.origin.fork_at(0, "alt")
    world.origin.extend(fork, 2)          # alt is longer -> reorg
    assert world.origin.canonical_branch == "alt"
    assert world.origin.confirmations(event) is None
    assert world.origin.canonical_state.ledger.locked == {}
    info = world.origin.last_reorg
    assert info is not None and info.fork_height == 0
    assert info.abandoned_depth == 1


def test_reorg_replays_both_branch_ledgers():
    """State after a reorg equals an independent replay of each branch's
    transaction sequence."""
    w = World()
    w.origin.submit(lock_tx(amount=10))
    w.origin.produce_block()
    fork = w.origin.fork_at(0, "alt")
    w.origin.submit(lock_tx(amount=25))
    w.origin.produce_block(fork)
    w.origin.submit(lock_tx(amount=30))
    w.origin.produce_block(fork)          # alt wins at height 2

    assert w.origin.canonical_branch == "alt"
    assert w.origin.canonical_state.ledger.locked["T"] == 55
    replayed = w.origin.replay_canonical()
    assert json_digest(replayed.summary()) == \
        json_digest(w.origin.canonical_state.summary())
    # abandoned branch state is still a pure function of its own txs
    main_state = w.origin.states[w.origin.branches["main"]]
    assert main_state.ledger.locked["T"] == 10


def test_confirmations_arithmetic(world):
    world.origin.submit(lock_tx())
    world.origin.produce_block()
    event = world.origin.canonical_events()[0]
    for depth in range(1, 7):
        world.origin.produce_block()
        assert world.origin.confirmations(event) == depth


def test_confirmations_monotone_without_reorg(world):
    world.origin.submit(lock_tx())
    world.origin.produce_block()
    event = world.origin.canonical_events()[0]
    seen = []
    for _ in range(10):
        seen.append(world.origin.confirmations(event))
        world.origin.produce_block()
    assert seen == sorted(seen)


def test_events_since_cursor_and_determinism(world):
    world.origin.submit(lock_tx(amount=10))
    world.origin.submit(lock_tx(amount=20))
    world.origin.produce_block()
    world.origin.produce_block()
    assert world.origin.events_since(world.origin.canonical_tip.height) == []
    events = world.origin.events_since(0)
    assert [e.payload["amount"] for e in events] == [10, 20]
    assert world.origin.events_since(0) == events  # repeatable
    assert [(e.block.height, e.index) for e in events] == [(1, 0), (1, 1)]


def test_block_hashes_unique_across_both_chains(world):
    hashes = set()
    for _ in range(5):
        hashes.add(world.origin.produce_block().block_hash)
        hashes.add(world.destination.produce_block().block_hash)
    genesis = {c.canonical_chain()[0].ref.block_hash
               for c in (world.origin, world.destination)}
    assert len(genesis) == 2
    assert len(hashes) == 10


def test_transfer_tx_applies(world):
    world.origin.submit(TransferTx(0, "T", ALICE, CAROL, 77))
    world.origin.produce_block()
    ledger = world.origin.canonical_state.ledger
    assert ledger.balance(world.token, CAROL) == 77


def test_pending_consumed_once_not_requeued_after_reorg(world):
    world.origin.submit(lock_tx())
    world.origin.produce_block()
    fork = world.origin.fork_at(0, "alt")
    world.origin.extend(fork, 2)
    # the lock lives only on the abandoned branch; nothing re-mines it
    kinds = [e.kind for e in world.origin.canonical_events()]
    assert EventKind.LOCK_REGISTERED not in kinds
    assert world.origin.pending == []
