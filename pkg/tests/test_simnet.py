import numpy as np
import pytest

from mpcfl.errors import DeadlockError, SelfSendError, UnknownPartyError
from mpcfl.simnet import ELEMENT_BYTES, Endpoint, Phase, SimNetwork

P = Endpoint.party


def test_send_counts_messages_and_elements():
    net = SimNetwork(3)
    net.send(P(1), P(2), Phase.P2P_AGGREGATION, 1, np.zeros(242, dtype=np.uint64))
    st = net.stats_snapshot()
    assert st.msg_num[Phase.P2P_AGGREGATION] == 1
    assert st.msg_size[Phase.P2P_AGGREGATION] == 242
    assert st.total_bytes == 242 * ELEMENT_BYTES
    net.send(P(2), P(3), Phase.P2P_AGGREGATION, 1, np.zeros(5, dtype=np.uint64))
    assert net.stats_snapshot().msg_num[Phase.P2P_AGGREGATION] == 2


def test_self_send_and_unknown_party_rejected():
    net = SimNetwork(2)
    with pytest.raises(SelfSendError):
        net.send(P(1), P(1), Phase.ELECTION, 0, [1])
    with pytest.raises(UnknownPartyError):
        net.send(P(1), P(3), Phase.ELECTION, 0, [1])
    with pytest.raises(UnknownPartyError):
        net.send(Endpoint.seat(1), P(1), Phase.BROADCAST, 0, [1])
    assert net.stats_snapshot().total_num == 0


def test_seats_are_distinct_from_parties():
    net = SimNetwork(2, n_seats=2)
    net.send(P(1), Endpoint.seat(1), Phase.COMMITTEE_UPLOAD, 1, [1, 2])
    assert net.stats_snapshot().msg_size[Phase.COMMITTEE_UPLOAD] == 2


def test_fresh_network_is_zero():
    st = SimNetwork(4).stats_snapshot()
    assert st.total_num == 0 and st.total_size == 0
    assert all(v == 0 for v in st.msg_num.values())


def test_all_to_all_delivered_in_canonical_order():
    net = SimNetwork(3)
    for src in (3, 1, 2):
        for dst in (2, 3, 1):
            if src != dst:
                net.send(P(src), P(dst), Phase.P2P_AGGREGATION, 1, [src * 10 + dst])
    delivered = net.run_round()
    assert len(delivered) == 6
    assert [(e.src.index, e.dst.index) for e in delivered] == [(1, 2), (1, 3), (2, 1), (2, 3), (3, 1), (3, 2)]
    assert net.sent == net.delivered == 6


def test_order_is_epoch_then_phase_then_endpoints():
    net = SimNetwork(2)
    net.send(P(2), P(1), Phase.BROADCAST, 1, [0])
    net.send(P(2), P(1), Phase.ELECTION, 0, [0])
    net.send(P(1), P(2), Phase.BROADCAST, 1, [0])
    net.send(P(1), P(2), Phase.P2P_AGGREGATION, 1, [0])
    keys = [(e.epoch, e.phase, e.src.index) for e in net.run_round()]
    assert keys == [(0, Phase.ELECTION, 2), (1, Phase.P2P_AGGREGATION, 1), (1, Phase.BROADCAST, 1), (1, Phase.BROADCAST, 2)]


def test_empty_round_is_noop():
    net = SimNetwork(2)
    assert net.run_round() == []
    assert net.delivery_log() == []


def test_collect_and_deadlock():
    net = SimNetwork(3)
    net.send(P(1), P(3), Phase.ELECTION, 0, [7])
    net.run_round()
    with pytest.raises(DeadlockError) as err:
        net.collect(P(3), Phase.ELECTION, 0, [P(1), P(2)])
    assert P(3) in err.value.waiting and err.value.waiting[P(3)] == [P(2)]
    got = net.collect(P(3), Phase.ELECTION, 0, [P(1)])
    assert got[P(1)].tolist() == [7]
    # consumed: asking again deadlocks
    with pytest.raises(DeadlockError):
        net.collect(P(3), Phase.ELECTION, 0, [P(1)])


def test_undelivered_envelope_is_not_visible():
    net = SimNetwork(2)
    net.send(P(1), P(2), Phase.ELECTION, 0, [1])
    with pytest.raises(DeadlockError):
        net.collect(P(2), Phase.ELECTION, 0, [P(1)])


def _scripted_run():
    net = SimNetwork(4)
    rng = np.random.default_rng(5)
    for _ in range(3):
        for src in rng.permutation(4) + 1:
            for dst in range(1, 5):
                if dst != src:
                    net.send(P(src), P(dst), Phase.P2P_AGGREGATION, 1, np.zeros(int(rng.integers(1, 9))))
        net.run_round()
    return net


def test_delivery_log_is_reproducible(tmp_path):
    a, b = _scripted_run(), _scripted_run()
    pa, pb = a.export_log(tmp_path / "a.log"), b.export_log(tmp_path / "b.log")
    assert pa.read_bytes() == pb.read_bytes()
    first = pa.read_text().splitlines()[0].split("\t")
    assert first[:4] == ["1", "P2P_AGGREGATION", "P1", "P2"]
    assert a.stats_snapshot() == b.stats_snapshot()


def test_stats_snapshot_is_a_copy():
    net = SimNetwork(2)
    snap = net.stats_snapshot()
    net.send(P(1), P(2), Phase.ELECTION, 0, [1])
    assert snap.total_num == 0
    assert net.stats_snapshot().total_num == 1
