import pytest

from swapgate import (
    AccountId,
    Behavior,
    FinalityPolicy,
    GatewayConfig,
    OracleIdentity,
    OracleNetwork,
    OracleRoster,
    StatusController,
    TokenId,
    build_chains,
)
from swapgate.crypto import oracle_secret

ALICE = AccountId(0, bytes.fromhex("aa" * 20))
BOB = AccountId(1, bytes.fromhex("bb" * 20))
CAROL = AccountId(0, bytes.fromhex("cc" * 20))


class World:
    """A fully wired two-chain gateway for direct-API tests."""

    def __init__(self, behaviors=None, seed=99, conf_depth=2, fin_depth=3,
                 timeout=6, window=10, initial=1000):
        behaviors = behaviors or [Behavior.HONEST] * 5
        n = len(behaviors)
        secrets = [oracle_secret(i, seed) for i in range(n)]
        self.roster = OracleRoster.with_default_threshold(tuple(secrets))
        self.token = TokenId("T", 0)
        self.chains = build_chains(
            GatewayConfig(roster=self.roster,
                          relevance_window={0: window, 1: window}),
            [self.token],
            [(self.token, ALICE, initial)],
        )
        self.network = OracleNetwork(
            [OracleIdentity(i, secrets[i], behaviors[i]) for i in range(n)],
            self.roster,
            {0: conf_depth, 1: conf_depth},
        )
        self.controller = StatusController({
            0: FinalityPolicy(fin_depth, timeout),
            1: FinalityPolicy(fin_depth, timeout),
        })
        self.conf_depth = conf_depth
        self.fin_depth = fin_depth

    @property
    def origin(self):
        return self.chains[0]

    @property
    def destination(self):
        return self.chains[1]


@pytest.fixture
def world():
    return World()
