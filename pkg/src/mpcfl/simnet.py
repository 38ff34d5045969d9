"""Deterministic in-process network with exact message accounting.

Endpoints are either FL parties (``Endpoint.party(i)``) or committee seats
(``Endpoint.seat(w)``). A seat is the aggregation service run by the w-th
committee member; it is addressed separately from the party that hosts it.

Sending enqueues an envelope and bumps the counters right away. Nothing is
visible to the receiver until :meth:`SimNetwork.run_round` delivers the
queue in canonical order ``(epoch, phase, src, dst, seq)``.
"""

from __future__ import annotations

import enum
from collections import defaultdict, deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from .errors import DeadlockError, SelfSendError, UnknownPartyError

ELEMENT_BYTES = 8


class Phase(enum.IntEnum):
    P2P_AGGREGATION = 0
    ELECTION = 1
    COMMITTEE_UPLOAD = 2
    COMMITTEE_EXCHANGE = 3
    BROADCAST = 4


class Endpoint(NamedTuple):
    role: str
    index: int

    @classmethod
    def party(cls, i: int) -> "Endpoint":
        return cls("party", int(i))

    @classmethod
    def seat(cls, w: int) -> "Endpoint":
        return cls("seat", int(w))

    def __str__(self):
        return f"{'P' if self.role == 'party' else 'C'}{self.index}"


@dataclass(frozen=True)
class Envelope:
    src: Endpoint
    dst: Endpoint
    phase: Phase
    epoch: int
    payload: np.ndarray
    seq: int = -1

    @property
    def payload_len(self) -> int:
        return int(self.payload.shape[0])

    def sort_key(self):
        return (self.epoch, int(self.phase), self.src, self.dst, self.seq)

    def log_line(self) -> str:
        return f"{self.epoch}\t{self.phase.name}\t{self.src}\t{self.dst}\t{self.payload_len}"


@dataclass
class NetworkStats:
    msg_num: dict = field(default_factory=lambda: {ph: 0 for ph in Phase})
    msg_size: dict = field(default_factory=lambda: {ph: 0 for ph in Phase})

    @property
    def total_num(self) -> int:
        return sum(self.msg_num.values())

    @property
    def total_size(self) -> int:
        return sum(self.msg_size.values())

    @property
    def total_bytes(self) -> int:
        return self.total_size * ELEMENT_BYTES

    def copy(self) -> "NetworkStats":
        return NetworkStats(dict(self.msg_num), dict(self.msg_size))

    def to_dict(self) -> dict:
        return {
            "msg_num": {ph.name: self.msg_num[ph] for ph in Phase},
            "msg_size": {ph.name: self.msg_size[ph] for ph in Phase},
            "total_num": self.total_num,
            "total_size": self.total_size,
        }


class SimNetwork:
    def __init__(
        self, n_parties: int = 0, n_seats: int = 0, keep_log: bool = True, keep_payloads: bool = False
    ):
        self._endpoints: set[Endpoint] = set()
        for i in range(1, n_parties + 1):
            self.register(Endpoint.party(i))
        for w in range(1, n_seats + 1):
            self.register(Endpoint.seat(w))
        self._queue: list[Envelope] = []
        self._inbox: dict[tuple, deque] = defaultdict(deque)
        self._stats = NetworkStats()
        self._seq = 0
        self.sent = 0
        self.delivered = 0
        self.keep_log = keep_log
        self.keep_payloads = keep_payloads
        self._log: list[tuple] = []
        self._archive: list[Envelope] = []

    def register(self, ep: Endpoint) -> None:
        self._endpoints.add(ep)

    def ensure_seats(self, m: int) -> None:
        for w in range(1, m + 1):
            self.register(Endpoint.seat(w))

    @property
    def endpoints(self) -> frozenset:
        return frozenset(self._endpoints)

    def send(self, src: Endpoint, dst: Endpoint, phase: Phase, epoch: int, payload) -> Envelope:
        if src not in self._endpoints:
            raise UnknownPartyError(src)
        if dst not in self._endpoints:
            raise UnknownPartyError(dst)
        if src == dst:
            raise SelfSendError(f"{src} cannot send to itself; local shares are kept, not sent")
        payload = np.asarray(payload)
        env = Envelope(src, dst, Phase(phase), int(epoch), payload, self._seq)
        self._seq += 1
        self._queue.append(env)
        self._stats.msg_num[env.phase] += 1
        self._stats.msg_size[env.phase] += env.payload_len
        self.sent += 1
        return env

    def broadcast(self, src: Endpoint, dsts: Iterable[Endpoint], phase: Phase, epoch: int, payload) -> int:
        """Point-to-point copies to every destination; each copy counts as one message."""
        k = 0
        for dst in dsts:
            self.send(src, dst, phase, epoch, payload)
            k += 1
        return k

    def run_round(self) -> list[Envelope]:
        batch = sorted(self._queue, key=Envelope.sort_key)
        self._queue = []
        for env in batch:
            self._inbox[(env.dst, env.phase, env.epoch, env.src)].append(env.payload)
        self.delivered += len(batch)
        if self.keep_log:
            self._log.extend((e.epoch, e.phase.name, str(e.src), str(e.dst), e.payload_len) for e in batch)
        if self.keep_payloads:
            self._archive.extend(batch)
        return batch

    @property
    def pending(self) -> int:
        return len(self._queue)

    def collect(self, dst: Endpoint, phase: Phase, epoch: int, srcs: Iterable[Endpoint]) -> dict:
        """Pop one delivered payload from each source; raises DeadlockError if any is missing."""
        return self.collect_many({dst: list(srcs)}, phase, epoch)[dst]

    def collect_many(self, expected: dict, phase: Phase, epoch: int) -> dict:
        waiting = {}
        for dst, srcs in expected.items():
            missing = [s for s in srcs if not self._inbox.get((dst, phase, epoch, s))]
            if missing:
                waiting[dst] = missing
        if waiting:
            raise DeadlockError(waiting)
        out = {}
        for dst, srcs in expected.items():
            got = {}
            for s in srcs:
                key = (dst, phase, epoch, s)
                got[s] = self._inbox[key].popleft()
                if not self._inbox[key]:
                    del self._inbox[key]
            out[dst] = got
        return out

    def stats_snapshot(self) -> NetworkStats:
        return self._stats.copy()

    def delivery_log(self) -> list[str]:
        return ["\t".join(map(str, row)) for row in self._log]

    def delivered_envelopes(self) -> list[Envelope]:
        """Full envelopes in delivery order; empty unless ``keep_payloads`` was set."""
        return list(self._archive)

    def export_log(self, path) -> Path:
        path = Path(path)
        with path.open("w") as fh:
            for line in self.delivery_log():
                fh.write(line + "\n")
        return path
