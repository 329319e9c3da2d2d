"""Token accounting: conservation, gating, inverse pairs."""

import random

import pytest
from hypothesis import given, strategies as st

from swapgate.errors import (
    InsufficientBalance,
    InsufficientLocked,
    NotAuthorized,
    NotWrappedToken,
    ZeroAmount,
)
from swapgate.ledger import AccountId, Ledger, TokenId

PORT = bytes.fromhex("01" * 20)
MINT_PORT = bytes.fromhex("02" * 20)
A1 = AccountId(0, bytes.fromhex("aa" * 20))
A2 = AccountId(0, bytes.fromhex("bb" * 20))
T = TokenId("T", 0)
SWT = TokenId("swT", 0, wrapped_of=TokenId("T", 1))


def fresh_ledger(amount=100) -> Ledger:
    ledger = Ledger(0, lock_authority=PORT, mint_authority=MINT_PORT)
    ledger.credit_initial(T, A1, amount)
    return ledger


def test_transfer_full_balance():
    ledger = fresh_ledger(100)
    ledger.transfer(T, A1, A2, 100)
    assert ledger.balance(T, A1) == 0
    assert ledger.balance(T, A2) == 100
    assert ledger.total_supply(T) == 100


def test_transfer_zero_amount():
    ledger = fresh_ledger()
    with pytest.raises(ZeroAmount):
        ledger.transfer(T, A1, A2, 0)


def test_transfer_insufficient():
    ledger = fresh_ledger(50)
    with pytest.raises(InsufficientBalance):
        ledger.transfer(T, A1, A2, 100)


def test_lock_unlock_inverse_pair():
    ledger = fresh_ledger(100)
    before = ledger.summary()
    ledger.lock(T, A1, 100, caller=PORT)
    assert ledger.locked_amount(T) == 100
    ledger.unlock(T, A1, 100, caller=PORT)
    assert ledger.summary() == before


def test_unlock_empty_pool():
    ledger = fresh_ledger()
    with pytest.raises(InsufficientLocked):
        ledger.unlock(T, A1, 1, caller=PORT)


def test_lock_requires_port_caller():
    ledger = fresh_ledger()
    with pytest.raises(NotAuthorized):
        ledger.lock(T, A1, 10, caller=A2.address)


def test_mint_and_burn_inverse():
    ledger = Ledger(0, mint_authority=MINT_PORT)
    ledger.mint(SWT, A1, 100, caller=MINT_PORT)
    assert ledger.total_supply(SWT) == 100
    assert ledger.balance(SWT, A1) == 100
    ledger.burn(SWT, A1, 100, caller=MINT_PORT)
    assert ledger.total_supply(SWT) == 0
    assert ledger.summary() == Ledger(0, mint_authority=MINT_PORT).summary()


def test_mint_non_wrapped_rejected():
    ledger = Ledger(0, mint_authority=MINT_PORT)
    with pytest.raises(NotWrappedToken):
        ledger.mint(T, A1, 10, caller=MINT_PORT)


def test_mint_requires_port_caller():
    ledger = Ledger(0, mint_authority=MINT_PORT)
    with pytest.raises(NotAuthorized):
        ledger.mint(SWT, A1, 10, caller=PORT)


@given(st.lists(st.tuples(st.sampled_from(["transfer", "lock", "unlock",
                                           "mint", "burn"]),
                          st.integers(0, 150)),
                max_size=30))
def test_non_port_callers_never_touch_pools(ops):
    """Gating: arbitrary call sequences from user accounts leave the locked
    pool and the wrapped supply untouched."""
    ledger = Ledger(0, lock_authority=PORT, mint_authority=MINT_PORT)
    ledger.credit_initial(T, A1, 1000)
    for op, amount in ops:
        try:
            if op == "transfer":
                ledger.transfer(T, A1, A2, amount)
            elif op == "lock":
                ledger.lock(T, A1, amount, caller=A1.address)
            elif op == "unlock":
                ledger.unlock(T, A1, amount, caller=A1.address)
            elif op == "mint":
                ledger.mint(SWT, A1, amount, caller=A1.address)
            elif op == "burn":
                ledger.burn(SWT, A1, amount, caller=A1.address)
        except Exception:
            pass
        assert ledger.locked == {}
        assert ledger.total_supply(SWT) == 0
        assert ledger.conservation_ok()


def test_conservation_under_random_port_traffic():
    """Supply always equals held plus locked, after every operation."""
    rng = random.Random(1234)
    ledger = Ledger(0, lock_authority=PORT, mint_authority=MINT_PORT)
    ledger.credit_initial(T, A1, 10_000)
    accounts = [A1, A2, AccountId(0, bytes.fromhex("cc" * 20))]
    for _ in range(500):
        op = rng.choice(["transfer", "lock", "unlock", "mint", "burn"])
        amount = rng.randint(0, 400)
        frm, to = rng.sample(accounts, 2)
        try:
            if op == "transfer":
                ledger.transfer(T, frm, to, amount)
            elif op == "lock":
                ledger.lock(T, frm, amount, caller=PORT)
            elif op == "unlock":
                ledger.unlock(T, to, amount, caller=PORT)
            elif op == "mint":
                ledger.mint(SWT, to, amount, caller=MINT_PORT)
            elif op == "burn":
                ledger.burn(SWT, frm, amount, caller=MINT_PORT)
        except Exception:
            pass
        assert ledger.conservation_ok()


def test_clone_is_independent():
    ledger = fresh_ledger(100)
    copy = ledger.clone()
    ledger.transfer(T, A1, A2, 40)
    assert copy.balance(T, A1) == 100
    assert copy.balance(T, A2) == 0


def test_zero_balances_pruned():
    ledger = fresh_ledger(100)
    ledger.transfer(T, A1, A2, 100)
    assert A1.address not in ledger.balances.get("T", {})
