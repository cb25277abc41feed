"""Restart record persistence, per-resource isolation, gc, and the
per-instance memory budget."""

import random

import pytest

from paxoslease import (
    AcquireCommand,
    BallotNumber,
    ClusterConfig,
    Deliver,
    FileRestartStore,
    LeaseTable,
    MemoryRestartStore,
    PrepareRequest,
    ProposeRequest,
    Lease,
    RestartRecordError,
    TimerFired,
)

MS = 1000


def make_table(node_id=1, n=3, restart=1, **kw):
    cfg = ClusterConfig(
        node_id=node_id, acceptor_ids=tuple(range(1, n + 1)), max_lease_ms=5000
    )
    return LeaseTable(cfg, restart_counter=restart, rng=random.Random(0), **kw)


# -- restart record -----------------------------------------------------------


def test_missing_record_returns_one_and_writes_it(tmp_path):
    path = tmp_path / "restart"
    store = FileRestartStore(str(path))
    assert store.load_and_bump() == 1
    assert path.read_text() == "1\n"


def test_existing_record_bumped(tmp_path):
    path = tmp_path / "restart"
    path.write_text("41\n")
    assert FileRestartStore(str(path)).load_and_bump() == 42


def test_corrupt_record_is_fatal(tmp_path):
    path = tmp_path / "restart"
    path.write_text("not-a-number\n")
    with pytest.raises(RestartRecordError):
        FileRestartStore(str(path)).load_and_bump()
    path.write_text("-3\n")
    with pytest.raises(RestartRecordError):
        FileRestartStore(str(path)).load_and_bump()


def test_crash_between_bump_and_use_never_reuses_ballots(tmp_path):
    """Crash-injection oracle: a run may bump the counter and die before
    proposing; later runs must still produce strictly increasing ballots.
    The oracle is the running maximum of every ballot ever generated."""
    path = tmp_path / "restart"
    store = FileRestartStore(str(path))
    rng = random.Random(3)
    history = []
    for _ in range(100):
        counter = store.load_and_bump()
        if rng.random() < 0.3:
            continue  # crashed before any ballot went out
        table = make_table(restart=counter)
        inst = table.instance("r")
        for _ in range(rng.randint(1, 5)):
            b = inst.proposer.next_ballot()
            assert not history or b > max(history)
            history.append(b)


def test_memory_store_counts_up():
    store = MemoryRestartStore()
    assert [store.load_and_bump() for _ in range(3)] == [1, 2, 3]


# -- dispatch -----------------------------------------------------------------


def test_message_for_new_resource_creates_instance():
    table = make_table()
    msg = PrepareRequest(BallotNumber(1, 1, 2))
    tagged = table.dispatch("r1", Deliver(msg, sender=2), now_us=0)
    assert "r1" in table.instances
    assert all(res == "r1" for res, _ in tagged)
    assert len(tagged) == 1


def test_malformed_resource_dropped_and_counted():
    table = make_table()
    msg = PrepareRequest(BallotNumber(1, 1, 2))
    assert table.dispatch("bad id", Deliver(msg, 2), 0) == []
    assert table.dispatch("", Deliver(msg, 2), 0) == []
    assert table.dispatch("x" * 129, Deliver(msg, 2), 0) == []
    assert table.dropped_malformed == 3
    assert not table.instances


def _feed(table, events):
    """Replay (resource, event, now) triples; returns the tagged effects."""
    out = []
    for resource, event, now in events:
        out.extend((now, res, eff) for res, eff in table.dispatch(resource, event, now))
    return out


def test_interleaved_resources_match_isolated_runs():
    """Differential oracle: a two-resource run produces, per resource,
    exactly the trace of a single-resource run fed the same inputs."""
    b = BallotNumber(1, 1, 2)
    traffic_r1 = [
        ("r1", Deliver(PrepareRequest(b), 2), 0),
        ("r1", Deliver(ProposeRequest(b, Lease(2, 2000)), 2), 10 * MS),
        ("r1", TimerFired("expiry"), 2010 * MS),
    ]
    traffic_r2 = [
        ("r2", Deliver(PrepareRequest(BallotNumber(1, 1, 3)), 3), 5 * MS),
        ("r2", Deliver(PrepareRequest(BallotNumber(1, 2, 3)), 3), 15 * MS),
    ]
    interleaved = sorted(traffic_r1 + traffic_r2, key=lambda e: e[2])

    combined = _feed(make_table(), interleaved)
    solo_r1 = _feed(make_table(), traffic_r1)
    solo_r2 = _feed(make_table(), traffic_r2)

    assert [e for e in combined if e[1] == "r1"] == solo_r1
    assert [e for e in combined if e[1] == "r2"] == solo_r2


def test_cross_instance_state_untouched():
    table = make_table()
    b = BallotNumber(1, 1, 2)
    table.dispatch("r1", Deliver(ProposeRequest(b, Lease(2, 2000)), 2), 0)
    table.dispatch("r2", Deliver(PrepareRequest(b), 2), 0)
    assert table.instances["r1"].acceptor.accepted_proposal is not None
    assert table.instances["r2"].acceptor.accepted_proposal is None


# -- gc -----------------------------------------------------------------------


def test_gc_removes_blank_idle_instances():
    table = make_table()
    table.dispatch("r1", Deliver(PrepareRequest(BallotNumber(1, 1, 2)), 2), 0)
    table.dispatch("r2", TimerFired("expiry"), 0)  # stays blank
    removed = table.gc_idle_instances(now_us=5001 * MS)
    assert removed == 1
    assert "r1" in table.instances and "r2" not in table.instances


def test_gc_retains_instance_with_unexpired_proposal():
    table = make_table()
    b = BallotNumber(1, 1, 2)
    table.dispatch("r1", Deliver(ProposeRequest(b, Lease(2, 2000)), 2), 0)
    assert table.gc_idle_instances(now_us=60_000 * MS) == 0


def test_gc_then_traffic_identical_to_never_gc(tmp_path):
    events = [
        ("r", TimerFired("expiry"), 0),  # creates a blank instance
        ("r", Deliver(PrepareRequest(BallotNumber(1, 1, 2)), 2), 9000 * MS),
        ("r", Deliver(ProposeRequest(BallotNumber(1, 1, 2), Lease(2, 2000)), 2), 9010 * MS),
    ]
    gc_table = make_table()
    out_gc = _feed(gc_table, events[:1])
    assert gc_table.gc_idle_instances(now_us=6000 * MS) == 1
    out_gc += _feed(gc_table, events[1:])

    plain_table = make_table()
    out_plain = _feed(plain_table, events)

    assert out_gc == out_plain


# -- memory budget -------------------------------------------------------------


def test_ten_thousand_instances_fit_the_state_budget():
    """Every instance, in a mix of proposer and acceptor states, must
    serialize to at most 256 bytes including the resource key."""
    table = make_table()
    rng = random.Random(5)
    for i in range(10_000):
        resource = f"res-{i:05d}"
        b = BallotNumber(rng.randint(1, 9), rng.randint(1, 999), 2)
        table.dispatch(resource, Deliver(PrepareRequest(b), 2), now_us=i)
        if i % 3 == 0:
            table.dispatch(
                resource, Deliver(ProposeRequest(b, Lease(2, 2000)), 2), now_us=i
            )
        if i % 7 == 0:
            table.dispatch(resource, AcquireCommand(2000, hold=False), now_us=i)
    sizes = [len(table.serialized_state(r)) for r in table.instances]
    assert len(sizes) == 10_000
    assert max(sizes) <= 256


def test_gated_boot_gates_every_instance():
    table = make_table(gate_acceptors=True, boot_us=0)
    out = table.dispatch(
        "r", Deliver(PrepareRequest(BallotNumber(1, 1, 2)), 2), now_us=100
    )
    assert out == []
    # Same process-wide gate applies to instances created later.
    later = table.dispatch(
        "s", Deliver(PrepareRequest(BallotNumber(1, 1, 2)), 2), now_us=4_999_999
    )
    assert later == []
    past = table.dispatch(
        "t", Deliver(PrepareRequest(BallotNumber(1, 1, 2)), 2), now_us=5_000_000
    )
    assert len(past) == 1
