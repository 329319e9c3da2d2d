"""Off-chain status registry: finalization and stuck-swap recovery.

The controller never writes to a chain. It watches canonical events on both
chains and keeps its own per-swap view: a swap becomes Processed when its
execution event is canonical, Finalized once that event is buried at least
the finality depth, and flagged stuck when it has sat unexecuted past the
recovery timeout (measured in blocks of the chain that should execute it).
A flagged swap is handed back to the oracle network for re-attestation; the
executing port's duplicate guard makes a re-delivered entry harmless.

If an execution event disappears in a reorg before the controller saw it
finalize, the view reverts to Registered and the timeout clock keeps
running from the original observation, so recovery fires as early as
possible. A Finalized swap losing its execution event would mean the chain
reorged deeper than the finality depth, which the scenario layer rejects
outright; the controller treats it as fatal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .chain import Chain, ChainEvent, EventKind
from .errors import InvalidScenario
from .ports import SwapStatus


@dataclass
class FinalityPolicy:
    finality_depth: int = 6
    recovery_timeout: int = 50

    def __post_init__(self):
        if self.finality_depth < 1:
            raise ValueError("finality depth must be at least 1")


@dataclass
class _SwapView:
    status: SwapStatus
    registration_chain: int
    execution_chain: int
    registered_height: int
    first_seen_exec_height: int
    last_stuck_height: int | None = None


@dataclass
class TickResult:
    transitions: list[dict] = field(default_factory=list)
    stuck: list[dict] = field(default_factory=list)
    requeue: list[bytes] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"transitions": self.transitions, "stuck": self.stuck}


class StatusController:
    def __init__(self, policies: dict[int, FinalityPolicy]):
        self.policies = dict(policies)
        self.views: dict[bytes, _SwapView] = {}

    def status_of(self, swap_id: bytes) -> SwapStatus | None:
        view = self.views.get(swap_id)
        return view.status if view else None

    def tick(self, chains: dict[int, Chain]) -> TickResult:
        """Single controller pass over both chains' canonical histories.

        Idempotent per block height: a second tick without new blocks emits
        nothing.
        """
        result = TickResult()
        registrations = self._canonical_registrations(chains)
        executions = self._canonical_executions(chains)

        for swap_id, (reg_chain, reg_event) in registrations.items():
            exec_chain = self._counterpart(chains, reg_chain)
            exec_tip = chains[exec_chain].canonical_tip.height
            view = self.views.get(swap_id)
            if view is None:
                view = _SwapView(
                    status=SwapStatus.REGISTERED,
                    registration_chain=reg_chain,
                    execution_chain=exec_chain,
                    registered_height=reg_event.block.height,
                    first_seen_exec_height=exec_tip,
                )
                self.views[swap_id] = view
                self._transition(result, swap_id, None, SwapStatus.REGISTERED,
                                 "registration_observed", chain=reg_chain)

            execution = executions.get(swap_id)
            if execution is not None:
                _, exec_event = execution
                depth = exec_tip - exec_event.block.height
                policy = self.policies[exec_chain]
                target = (SwapStatus.FINALIZED if depth >= policy.finality_depth
                          else SwapStatus.PROCESSED)
                if view.status == SwapStatus.REGISTERED and \
                        target >= SwapStatus.PROCESSED:
                    self._transition(result, swap_id, SwapStatus.REGISTERED,
                                     SwapStatus.PROCESSED,
                                     "execution_canonical", chain=exec_chain)
                    view.status = SwapStatus.PROCESSED
                if view.status == SwapStatus.PROCESSED and \
                        target == SwapStatus.FINALIZED:
                    self._transition(result, swap_id, SwapStatus.PROCESSED,
                                     SwapStatus.FINALIZED,
                                     f"execution_depth_{depth}",
                                     chain=exec_chain)
                    view.status = SwapStatus.FINALIZED
            else:
                if view.status == SwapStatus.FINALIZED:
                    raise InvalidScenario(
                        f"finalized swap {swap_id.hex()} lost its execution "
                        f"event: reorg deeper than the finality depth")
                if view.status == SwapStatus.PROCESSED:
                    self._transition(result, swap_id, SwapStatus.PROCESSED,
                                     SwapStatus.REGISTERED, "execution_reorged",
                                     revert=True, chain=exec_chain)
                    view.status = SwapStatus.REGISTERED
                waited = exec_tip - view.first_seen_exec_height
                if waited > self.policies[exec_chain].recovery_timeout and \
                        view.last_stuck_height != exec_tip:
                    view.last_stuck_height = exec_tip
                    result.stuck.append({
                        "swap_id": swap_id.hex(),
                        "execution_chain": exec_chain,
                        "waited_blocks": waited,
                    })
                    result.requeue.append(swap_id)

        for swap_id in list(self.views):
            if swap_id not in registrations:
                view = self.views.pop(swap_id)
                self._transition(result, swap_id, view.status, None,
                                 "registration_reorged", revert=True)
        return result

    # --- helpers -----------------------------------------------------------

    @staticmethod
    def _counterpart(chains: dict[int, Chain], chain_id: int) -> int:
        others = [cid for cid in chains if cid != chain_id]
        assert len(others) == 1, "controller expects exactly two chains"
        return others[0]

    @staticmethod
    def _canonical_registrations(
            chains: dict[int, Chain]) -> dict[bytes, tuple[int, ChainEvent]]:
        out: dict[bytes, tuple[int, ChainEvent]] = {}
        for chain_id in sorted(chains):
            for event in chains[chain_id].canonical_events():
                if event.kind in (EventKind.LOCK_REGISTERED,
                                  EventKind.BURN_REGISTERED):
                    assert event.swap_id is not None
                    out.setdefault(event.swap_id, (chain_id, event))
        return out

    @staticmethod
    def _canonical_executions(
            chains: dict[int, Chain]) -> dict[bytes, tuple[int, ChainEvent]]:
        out: dict[bytes, tuple[int, ChainEvent]] = {}
        for chain_id in sorted(chains):
            for event in chains[chain_id].canonical_events():
                if event.kind in (EventKind.MINT_EXECUTED,
                                  EventKind.UNLOCK_EXECUTED):
                    assert event.swap_id is not None
                    out.setdefault(event.swap_id, (chain_id, event))
        return out

    @staticmethod
    def _transition(result: TickResult, swap_id: bytes,
                    old: SwapStatus | None, new: SwapStatus | None,
                    reason: str, revert: bool = False,
                    chain: int | None = None) -> None:
        result.transitions.append({
            "swap_id": swap_id.hex(),
            "from": old.label if old else None,
            "to": new.label if new else None,
            "reason": reason,
            "revert": revert,
            "chain": chain,
        })
