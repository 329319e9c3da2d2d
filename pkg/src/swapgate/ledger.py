"""Fungible-token accounting embedded in a chain's state.

Amounts are unsigned integers in minimal units. Maps are kept sparse (zero
entries are pruned) so that two ledgers with the same holdings compare and
serialize identically. The privileged pool operations are gated to the
configured port contract addresses.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (
    InsufficientBalance,
    InsufficientLocked,
    NotAuthorized,
    NotWrappedToken,
    UnknownToken,
    WrongChain,
    ZeroAmount,
)

ADDRESS_LEN = 20
WRAPPED_PREFIX = "sw"


@dataclass(frozen=True)
class AccountId:
    chain: int
    address: bytes

    def __post_init__(self):
        if len(self.address) != ADDRESS_LEN:
            raise ValueError(f"address must be {ADDRESS_LEN} bytes")

    def to_json(self) -> dict:
        return {"chain": self.chain, "address": self.address.hex()}


@dataclass(frozen=True)
class TokenId:
    symbol: str
    chain: int
    wrapped_of: "TokenId | None" = None

    @property
    def is_wrapped(self) -> bool:
        return self.wrapped_of is not None

    def to_json(self) -> dict:
        out: dict = {"symbol": self.symbol, "chain": self.chain}
        if self.wrapped_of is not None:
            out["wrapped_of"] = self.wrapped_of.to_json()
        return out


def wrapped_symbol(original: str) -> str:
    return WRAPPED_PREFIX + original


class TokenRegistry:
    """Symbols known on one chain. Registration is append-only."""

    def __init__(self, tokens: dict[str, TokenId] | None = None):
        self.tokens: dict[str, TokenId] = dict(tokens) if tokens else {}

    def register(self, token: TokenId) -> TokenId:
        existing = self.tokens.get(token.symbol)
        if existing is not None:
            if existing != token:
                raise ValueError(f"conflicting registration for {token.symbol!r}")
            return existing
        self.tokens[token.symbol] = token
        return token

    def get(self, symbol: str) -> TokenId | None:
        return self.tokens.get(symbol)

    def require(self, symbol: str) -> TokenId:
        token = self.tokens.get(symbol)
        if token is None:
            raise UnknownToken(f"token {symbol!r} is not registered")
        return token

    def clone(self) -> "TokenRegistry":
        return TokenRegistry(self.tokens)

    def summary(self) -> dict:
        return {sym: tok.to_json() for sym, tok in sorted(self.tokens.items())}


@dataclass
class Ledger:
    """Balances, the locked pool and total supply for one chain.

    lock_authority / mint_authority are the only addresses allowed to touch
    the locked pool / wrapped supply; they are the local port contracts.
    """

    chain_id: int
    lock_authority: bytes | None = None
    mint_authority: bytes | None = None
    balances: dict[str, dict[bytes, int]] = field(default_factory=dict)
    locked: dict[str, int] = field(default_factory=dict)
    supply: dict[str, int] = field(default_factory=dict)

    # --- queries -------------------------------------------------------------

    def balance(self, token: TokenId, account: AccountId) -> int:
        return self.balances.get(token.symbol, {}).get(account.address, 0)

    def locked_amount(self, token: TokenId) -> int:
        return self.locked.get(token.symbol, 0)

    def total_supply(self, token: TokenId) -> int:
        return self.supply.get(token.symbol, 0)

    def conservation_ok(self) -> bool:
        symbols = set(self.supply) | set(self.locked) | set(self.balances)
        for sym in symbols:
            held = sum(self.balances.get(sym, {}).values())
            if self.supply.get(sym, 0) != held + self.locked.get(sym, 0):
                return False
        return True

    # --- internal mutators ----------------------------------------------------

    def _credit(self, symbol: str, address: bytes, amount: int) -> None:
        per_token = self.balances.setdefault(symbol, {})
        per_token[address] = per_token.get(address, 0) + amount

    def _debit(self, symbol: str, address: bytes, amount: int) -> None:
        per_token = self.balances.get(symbol, {})
        held = per_token.get(address, 0)
        if held < amount:
            raise InsufficientBalance(
                f"{symbol}: account holds {held}, needs {amount}")
        remaining = held - amount
        if remaining:
            per_token[address] = remaining
        else:
            per_token.pop(address, None)
            if not per_token:
                self.balances.pop(symbol, None)

    def _check_amount(self, amount: int) -> None:
        if amount <= 0:
            raise ZeroAmount(f"amount must be positive, got {amount}")

    def _check_token_chain(self, token: TokenId) -> None:
        if token.chain != self.chain_id:
            raise WrongChain(
                f"token {token.symbol!r} lives on chain {token.chain}, "
                f"not chain {self.chain_id}")

    # --- seeding ---------------------------------------------------------------

    def credit_initial(self, token: TokenId, account: AccountId, amount: int) -> None:
        """Genesis-time seeding; raises supply along with the balance."""
        self._check_amount(amount)
        self._check_token_chain(token)
        self._credit(token.symbol, account.address, amount)
        self.supply[token.symbol] = self.supply.get(token.symbol, 0) + amount

    # --- public operations -------------------------------------------------------

    def transfer(self, token: TokenId, sender: AccountId, receiver: AccountId,
                 amount: int) -> None:
        self._check_amount(amount)
        self._check_token_chain(token)
        if sender.chain != self.chain_id or receiver.chain != self.chain_id:
            raise WrongChain("transfer accounts must live on this chain")
        self._debit(token.symbol, sender.address, amount)
        self._credit(token.symbol, receiver.address, amount)

    def lock(self, token: TokenId, owner: AccountId, amount: int,
             caller: bytes) -> None:
        if self.lock_authority is None or caller != self.lock_authority:
            raise NotAuthorized("only the lock-unlock port may lock funds")
        self._check_amount(amount)
        self._check_token_chain(token)
        self._debit(token.symbol, owner.address, amount)
        self.locked[token.symbol] = self.locked.get(token.symbol, 0) + amount

    def unlock(self, token: TokenId, receiver: AccountId, amount: int,
               caller: bytes) -> None:
        if self.lock_authority is None or caller != self.lock_authority:
            raise NotAuthorized("only the lock-unlock port may unlock funds")
        self._check_amount(amount)
        self._check_token_chain(token)
        pool = self.locked.get(token.symbol, 0)
        if pool < amount:
            raise InsufficientLocked(
                f"{token.symbol}: locked pool holds {pool}, needs {amount}")
        remaining = pool - amount
        if remaining:
            self.locked[token.symbol] = remaining
        else:
            self.locked.pop(token.symbol, None)
        self._credit(token.symbol, receiver.address, amount)

    def mint(self, token: TokenId, receiver: AccountId, amount: int,
             caller: bytes) -> None:
        if self.mint_authority is None or caller != self.mint_authority:
            raise NotAuthorized("only the issue-burn port may mint")
        if not token.is_wrapped:
            raise NotWrappedToken(f"{token.symbol!r} is not a wrapped token")
        self._check_amount(amount)
        self._check_token_chain(token)
        self._credit(token.symbol, receiver.address, amount)
        self.supply[token.symbol] = self.supply.get(token.symbol, 0) + amount

    def burn(self, token: TokenId, owner: AccountId, amount: int,
             caller: bytes) -> None:
        if self.mint_authority is None or caller != self.mint_authority:
            raise NotAuthorized("only the issue-burn port may burn")
        if not token.is_wrapped:
            raise NotWrappedToken(f"{token.symbol!r} is not a wrapped token")
        self._check_amount(amount)
        self._check_token_chain(token)
        self._debit(token.symbol, owner.address, amount)
        remaining = self.supply.get(token.symbol, 0) - amount
        if remaining:
            self.supply[token.symbol] = remaining
        else:
            self.supply.pop(token.symbol, None)

    # --- snapshots -----------------------------------------------------------------

    def clone(self) -> "Ledger":
        return Ledger(
            chain_id=self.chain_id,
            lock_authority=self.lock_authority,
            mint_authority=self.mint_authority,
            balances={sym: dict(per) for sym, per in self.balances.items()},
            locked=dict(self.locked),
            supply=dict(self.supply),
        )

    def accounting(self) -> dict:
        """Per-token conservation tuple, for traces and invariant checks."""
        symbols = sorted(set(self.supply) | set(self.locked) | set(self.balances))
        return {
            sym: {
                "supply": self.supply.get(sym, 0),
                "locked": self.locked.get(sym, 0),
                "balances_sum": sum(self.balances.get(sym, {}).values()),
            }
            for sym in symbols
        }

    def summary(self) -> dict:
        return {
            "balances": {
                sym: {addr.hex(): amt for addr, amt in sorted(per.items())}
                for sym, per in sorted(self.balances.items())
            },
            "locked": dict(sorted(self.locked.items())),
            "supply": dict(sorted(self.supply.items())),
        }
