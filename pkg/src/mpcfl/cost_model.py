"""Closed-form message counts for the aggregation protocols.

All quantities are exact Python integers. Sizes are in field elements.

Two variants exist for the committee exchange inside Phase II:

``paper``  ``m - 1`` exchange messages per epoch, the reference closed form.
``trace``  ``m * (m - 1)``, what an all-to-all exchange among the
           ``m`` seats actually sends; the simulator matches this one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigError

VARIANTS = ("paper", "trace")


@dataclass(frozen=True)
class CostInputs:
    n: int
    e: int = 15
    t: int = 3
    m: int = 3
    b: int = 10
    s: int = 242
    election_rounds: int = 1

    def __post_init__(self):
        for name in ("n", "e", "t", "m", "b", "s", "election_rounds"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.n < 2:
            raise ConfigError("at least two parties are required")
        if self.m > self.n:
            raise ConfigError(f"committee size m={self.m} exceeds n={self.n}")


@dataclass(frozen=True)
class CostBreakdown:
    msg_num: int
    msg_size: int
    phases: dict = field(default_factory=dict)

    def __add__(self, other: "CostBreakdown") -> "CostBreakdown":
        return CostBreakdown(
            self.msg_num + other.msg_num,
            self.msg_size + other.msg_size,
            {**self.phases, **other.phases},
        )

    def to_dict(self) -> dict:
        return {"msg_num": self.msg_num, "msg_size": self.msg_size, "phases": dict(self.phases)}


def p2p_cost(c: CostInputs) -> CostBreakdown:
    num = 2 * c.n * c.n * c.e - 2 * c.n * c.e
    return CostBreakdown(num, num * c.s, {"P2P_AGGREGATION": (num, num * c.s)})


def plaintext_cost(c: CostInputs) -> CostBreakdown:
    """Direct model exchange without MPC: one all-to-all round per epoch."""
    num = c.n * (c.n - 1) * c.e
    return CostBreakdown(num, num * c.s, {"P2P_AGGREGATION": (num, num * c.s)})


def phase1_cost(c: CostInputs, variant: str = "paper") -> CostBreakdown:
    _check_variant(variant)
    rounds = 1 if variant == "paper" else c.election_rounds
    num = (2 * c.n * c.n - 2 * c.n) * rounds
    return CostBreakdown(num, num * c.b, {"ELECTION": (num, num * c.b)})


def phase2_cost(c: CostInputs, variant: str = "paper") -> CostBreakdown:
    _check_variant(variant)
    upload = c.n * c.m * c.e
    exchange = (c.m - 1 if variant == "paper" else c.m * (c.m - 1)) * c.e
    bcast = c.n * c.e
    num = upload + exchange + bcast
    return CostBreakdown(
        num,
        num * c.s,
        {
            "COMMITTEE_UPLOAD": (upload, upload * c.s),
            "COMMITTEE_EXCHANGE": (exchange, exchange * c.s),
            "BROADCAST": (bcast, bcast * c.s),
        },
    )


def two_phase_cost(c: CostInputs, variant: str = "paper") -> CostBreakdown:
    total = phase1_cost(c, variant) + phase2_cost(c, variant)
    if variant == "paper":
        n, m, e, b, s = c.n, c.m, c.e, c.b, c.s
        num = 2 * n * n + n * (m * e + e - 2) + m * e - e
        size = 2 * n * n * b + n * (m * e * s + e * s - 2 * b) + m * e * s - e * s
        if (num, size) != (total.msg_num, total.msg_size):
            raise AssertionError("closed form disagrees with the phase sum")
    return total


def predict(topology: str, c: CostInputs, variant: str = "paper") -> CostBreakdown:
    topology = str(getattr(topology, "value", topology))
    if topology == "p2p":
        return p2p_cost(c)
    if topology == "plaintext":
        return plaintext_cost(c)
    if topology == "two-phase":
        return two_phase_cost(c, variant)
    raise ConfigError(f"unknown topology {topology!r}")


def _check_variant(variant: str) -> None:
    if variant not in VARIANTS:
        raise ConfigError(f"variant must be one of {VARIANTS}, got {variant!r}")


def cost_table(n_values, topologies=("p2p", "two-phase"), e=15, m=3, b=10, s=242, variant="paper") -> list[dict]:
    """Rows of (n, topology, msg_num, msg_size) for plotting."""
    rows = []
    for n in n_values:
        for topo in topologies:
            c = CostInputs(n=n, e=e, m=min(m, n), b=b, s=s)
            br = predict(topo, c, variant)
            rows.append({"n": n, "topology": topo, "msg_num": br.msg_num, "msg_size": br.msg_size})
    return rows
