"""MPC aggregation protocols run over a :class:`~mpcfl.simnet.SimNetwork`.

* :func:`p2p_secure_sum` / :func:`p2p_model_aggregate`: every party shares
  with every other party, two all-to-all rounds per call.
* :func:`elect_committee`: parties vote through the secure sum and elect
  ``m`` committee members.
* :func:`two_phase_aggregate`: parties upload ``m`` shares to the committee
  seats, seats exchange partial sums and send the global model back.

Parties are numbered ``1..n``. Each party derives its randomness from
``party_stream(seed, party, phase, epoch, round)`` so runs are reproducible.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BadCommitteeError, ConfigError, ElectionStalledError, LengthMismatchError
from .learner import ModelTensor
from .field import DEFAULT_PARAMS, FieldParams, decode_fixed, encode_fixed, party_stream, vec_sum
from .sharing import SchemeKind, ShareVector, SharingScheme
from .simnet import Endpoint, Phase, SimNetwork


class Topology(str, enum.Enum):
    P2P = "p2p"
    TWO_PHASE = "two-phase"
    PLAINTEXT = "plaintext"


@dataclass(frozen=True)
class Committee:
    members: tuple[int, ...]

    def validate(self, n: int, m: int | None = None) -> "Committee":
        if len(set(self.members)) != len(self.members):
            raise BadCommitteeError(f"duplicate committee members {self.members}")
        if any(not 1 <= c <= n for c in self.members):
            raise BadCommitteeError(f"members {self.members} not within 1..{n}")
        if m is not None and len(self.members) != m:
            raise BadCommitteeError(f"committee has {len(self.members)} members, expected {m}")
        return self

    @property
    def m(self) -> int:
        return len(self.members)

    def seat_for(self, party: int) -> int:
        """Seat that sends the global model to ``party``: the w with ``party mod m == w - 1``."""
        return party % self.m + 1


@dataclass(frozen=True)
class ElectionConfig:
    m: int
    b: int
    max_rounds: int = 16

    def validate(self, n: int) -> "ElectionConfig":
        if not 1 <= self.m <= n:
            raise ConfigError(f"committee size m={self.m} must lie in [1, n={n}]")
        if self.b < 1 or self.max_rounds < 1:
            raise ConfigError("batch size and max_rounds must be positive")
        return self


@dataclass
class Session:
    """Shared context of one protocol run: network, field, master seed."""

    net: SimNetwork
    params: FieldParams = DEFAULT_PARAMS
    seed: int = 0
    election_rounds: int = 0
    committee: Committee | None = None

    @classmethod
    def create(cls, n: int, params: FieldParams = DEFAULT_PARAMS, seed: int = 0, **net_kw) -> "Session":
        return cls(SimNetwork(n, **net_kw), params, seed)


def _party_ids(n: int) -> list[Endpoint]:
    return [Endpoint.party(i) for i in range(1, n + 1)]


def _make_scheme(kind, n_shares: int) -> SharingScheme:
    kind = SchemeKind(kind)
    if kind is SchemeKind.ADDITIVE:
        return SharingScheme.additive(n_shares)
    return SharingScheme.shamir(n_shares, n_shares - 1)


def _agree(results: Sequence[np.ndarray], what: str) -> np.ndarray:
    first = results[0]
    for r in results[1:]:
        if not np.array_equal(r, first):
            raise RuntimeError(f"parties disagree on {what}")
    return first


# ---------------------------------------------------------------------------
# peer-to-peer
# ---------------------------------------------------------------------------


def p2p_sum_per_party(
    values: Sequence, kind, sess: Session, phase: Phase = Phase.P2P_AGGREGATION, epoch: int = 0, tag: str = ""
) -> list[np.ndarray]:
    """Run the two-round secure sum; returns the field result held by each party."""
    n = len(values)
    if n < 2:
        raise ConfigError("the secure sum needs at least two parties")
    p, net = sess.params, sess.net
    secrets = [np.asarray(v, dtype=np.uint64) for v in values]
    if len({s.shape for s in secrets}) != 1:
        raise LengthMismatchError("parties hold inputs of different lengths")
    scheme = _make_scheme(kind, n)
    parties = _party_ids(n)

    # round 1: party i keeps slot i and sends slot j to party j
    kept = {}
    for i, ep in enumerate(parties, start=1):
        rng = party_stream(sess.seed, i, phase.name + tag, epoch, "shares")
        shares = scheme.share(secrets[i - 1], rng, p, owner=i)
        for sh in shares:
            if sh.slot == i:
                kept[i] = sh.values
            else:
                net.send(ep, Endpoint.party(sh.slot), phase, epoch, sh.values)
    net.run_round()
    inbound = net.collect_many({ep: [o for o in parties if o != ep] for ep in parties}, phase, epoch)
    partial = {}
    for i, ep in enumerate(parties, start=1):
        rows = [kept[i]] + [inbound[ep][o] for o in parties if o != ep]
        partial[i] = vec_sum(np.stack(rows), p)

    # round 2: every party publishes its partial sum
    for i, ep in enumerate(parties, start=1):
        for other in parties:
            if other != ep:
                net.send(ep, other, phase, epoch, partial[i])
    net.run_round()
    inbound = net.collect_many({ep: [o for o in parties if o != ep] for ep in parties}, phase, epoch)
    results = []
    for i, ep in enumerate(parties, start=1):
        got = {i: partial[i]}
        got.update({o.index: inbound[ep][o] for o in parties if o != ep})
        slots = [ShareVector(0, k, got[k]) for k in sorted(got)]
        results.append(scheme.reconstruct(slots, p))
    return results


def p2p_secure_sum(values: Sequence, kind, sess: Session, phase: Phase = Phase.P2P_AGGREGATION, epoch: int = 0):
    """Sum of every party's private field vector, as agreed by all parties."""
    return _agree(p2p_sum_per_party(values, kind, sess, phase, epoch), "the secure sum")


def p2p_model_aggregate(models: Sequence, kind, sess: Session, epoch: int = 0) -> np.ndarray:
    """Average of real-valued model vectors via the secure sum; division by n happens after reconstruction."""
    n = len(models)
    encoded = [encode_fixed(np.asarray(w, dtype=np.float64), sess.params) for w in models]
    sums = p2p_sum_per_party(encoded, kind, sess, Phase.P2P_AGGREGATION, epoch)
    decoded = [decode_fixed(s, sess.params, divisor=n) for s in sums]
    return _agree(decoded, "the aggregated model")


def plaintext_aggregate(models: Sequence, sess: Session, epoch: int = 0) -> np.ndarray:
    """Baseline without MPC: every party sends its encoded model to every other party."""
    n = len(models)
    p, net = sess.params, sess.net
    parties = _party_ids(n)
    encoded = [encode_fixed(np.asarray(w, dtype=np.float64), p) for w in models]
    for i, ep in enumerate(parties):
        for other in parties:
            if other != ep:
                net.send(ep, other, Phase.P2P_AGGREGATION, epoch, encoded[i])
    net.run_round()
    inbound = net.collect_many(
        {ep: [o for o in parties if o != ep] for ep in parties}, Phase.P2P_AGGREGATION, epoch
    )
    results = []
    for i, ep in enumerate(parties):
        got = {ep: encoded[i], **inbound[ep]}
        total = vec_sum(np.stack([got[o] for o in parties]), p)
        results.append(decode_fixed(total, p, divisor=n))
    return _agree(results, "the aggregated model")


# ---------------------------------------------------------------------------
# Phase I: committee election
# ---------------------------------------------------------------------------


def tally_committee(aggregate: Sequence[int], n: int, m: int, current: Sequence[int] = ()) -> list[int]:
    """Extend ``current`` from one aggregated vote vector.

    Entry ``B`` votes for party ``(B mod n) + 1``. Ids are taken by
    descending tally, ties to the lower id, skipping members already
    elected, until the committee has ``m`` members.
    """
    chosen = list(current)
    ids = [int(v) % n + 1 for v in aggregate]
    tally = Counter(ids)
    for pid, _ in sorted(tally.items(), key=lambda kv: (-kv[1], kv[0])):
        if len(chosen) >= m:
            break
        if pid not in chosen:
            chosen.append(pid)
    return chosen


def elect_committee(n: int, cfg: ElectionConfig, kind, sess: Session) -> Committee:
    """Repeat vote rounds until ``m`` members are elected or ``max_rounds`` is hit."""
    cfg.validate(n)
    views = [[] for _ in range(n)]
    rounds = 0
    while len(views[0]) < cfg.m:
        if rounds >= cfg.max_rounds:
            raise ElectionStalledError(
                f"only {len(views[0])} of {cfg.m} members after {cfg.max_rounds} rounds"
            )
        votes = [
            party_stream(sess.seed, i, "election-votes", rounds).integers(1, n + 1, size=cfg.b).astype(np.uint64)
            for i in range(1, n + 1)
        ]
        sums = p2p_sum_per_party(votes, kind, sess, Phase.ELECTION, epoch=0, tag=f"-r{rounds}")
        views = [tally_committee(s, n, cfg.m, view) for s, view in zip(sums, views)]
        rounds += 1
    first = views[0]
    if any(v != first for v in views):
        raise RuntimeError("parties disagree on the committee")
    sess.election_rounds += rounds
    committee = Committee(tuple(first)).validate(n, cfg.m)
    sess.committee = committee
    return committee


# ---------------------------------------------------------------------------
# Phase II: committee-mediated aggregation
# ---------------------------------------------------------------------------


def two_phase_per_party(models: Sequence, committee: Committee, kind, sess: Session, epoch: int = 0) -> list[np.ndarray]:
    n = len(models)
    committee.validate(n)
    m = committee.m
    if m < 2:
        raise BadCommitteeError("a committee of one would see every model in the clear")
    p, net = sess.params, sess.net
    net.ensure_seats(m)
    parties = _party_ids(n)
    seats = [Endpoint.seat(w) for w in range(1, m + 1)]
    scheme = _make_scheme(kind, m)

    # uploads: party i sends share w to seat w
    encoded = [encode_fixed(np.asarray(w, dtype=np.float64), p) for w in models]
    if len({e.shape for e in encoded}) != 1:
        raise LengthMismatchError("parties hold models of different sizes")
    for i, ep in enumerate(parties, start=1):
        rng = party_stream(sess.seed, i, Phase.COMMITTEE_UPLOAD.name, epoch)
        for sh in scheme.share(encoded[i - 1], rng, p, owner=i):
            net.send(ep, seats[sh.slot - 1], Phase.COMMITTEE_UPLOAD, epoch, sh.values)
    net.run_round()
    uploads = net.collect_many({s: parties for s in seats}, Phase.COMMITTEE_UPLOAD, epoch)
    local = {s: vec_sum(np.stack([uploads[s][ep] for ep in parties]), p) for s in seats}

    # seats exchange their local sums
    for s in seats:
        for other in seats:
            if other != s:
                net.send(s, other, Phase.COMMITTEE_EXCHANGE, epoch, local[s])
    net.run_round()
    inbound = net.collect_many({s: [o for o in seats if o != s] for s in seats}, Phase.COMMITTEE_EXCHANGE, epoch)
    totals = {}
    for s in seats:
        got = {s: local[s], **inbound[s]}
        totals[s] = scheme.reconstruct([ShareVector(0, o.index, got[o]) for o in seats], p)
    _agree([totals[s] for s in seats], "the committee sum")

    # seat w serves the parties with i mod m == w - 1
    for ep in parties:
        s = seats[committee.seat_for(ep.index) - 1]
        net.send(s, ep, Phase.BROADCAST, epoch, totals[s])
    net.run_round()
    results = []
    for ep in parties:
        s = seats[committee.seat_for(ep.index) - 1]
        payload = net.collect(ep, Phase.BROADCAST, epoch, [s])[s]
        results.append(decode_fixed(payload, p, divisor=n))
    return results


def two_phase_aggregate(models: Sequence, committee: Committee, kind, sess: Session, epoch: int = 0) -> np.ndarray:
    return _agree(two_phase_per_party(models, committee, kind, sess, epoch), "the aggregated model")


# ---------------------------------------------------------------------------
# one federated epoch
# ---------------------------------------------------------------------------


def aggregate(models: Sequence, topology, kind, sess: Session, epoch: int, committee: Committee | None = None) -> np.ndarray:
    topology = Topology(topology)
    if len(models) == 1:
        return np.array(models[0], dtype=np.float64, copy=True)
    if topology is Topology.P2P:
        return p2p_model_aggregate(models, kind, sess, epoch)
    if topology is Topology.PLAINTEXT:
        return plaintext_aggregate(models, sess, epoch)
    committee = committee or sess.committee
    if committee is None:
        raise BadCommitteeError("two-phase aggregation needs an elected committee")
    return two_phase_aggregate(models, committee, kind, sess, epoch)


def federated_round(parties: Sequence, epoch: int, topology, kind, sess: Session, committee: Committee | None = None):
    """Aggregate every party's current model and install the result at all parties.

    ``parties`` are objects with a mutable ``model`` attribute holding a
    :class:`~mpcfl.learner.ModelTensor`. Returns the global model.
    """
    global_w = aggregate([pt.model.weights for pt in parties], topology, kind, sess, epoch, committee)
    spec = parties[0].model.spec
    g = ModelTensor(spec, global_w, epoch=epoch, iteration=0)
    for pt in parties:
        pt.model = ModelTensor(spec, global_w.copy(), epoch=epoch + 1, iteration=0)
    return g
