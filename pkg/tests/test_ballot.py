"""Ballot ordering and generation."""

import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from paxoslease import BallotNumber, BallotSpaceExhausted, Proposer, ballot_compare
from paxoslease.messages import COUNTER_MAX

ballots = st.builds(
    BallotNumber,
    st.integers(min_value=0, max_value=10),
    st.integers(min_value=0, max_value=10),
    st.integers(min_value=0, max_value=10),
)


def test_compare_identity():
    b = BallotNumber(1, 5, 2)
    assert ballot_compare(b, BallotNumber(1, 5, 2)) == 0


def test_restart_counter_most_significant():
    assert ballot_compare(BallotNumber(2, 0, 1), BallotNumber(1, 9, 3)) == 1


def test_proposer_id_tiebreak():
    assert ballot_compare(BallotNumber(1, 5, 2), BallotNumber(1, 5, 3)) == -1


@given(ballots, ballots)
def test_total_and_antisymmetric(a, b):
    c = ballot_compare(a, b)
    assert c == -ballot_compare(b, a)
    assert (c == 0) == (a == b)


@given(ballots, ballots, ballots)
def test_transitive(a, b, c):
    x, y, z = sorted([a, b, c])
    assert ballot_compare(x, y) <= 0 <= ballot_compare(z, y)


@given(ballots, ballots)
def test_distinct_proposers_never_equal(a, b):
    if a.proposer_id != b.proposer_id:
        assert a != b


def make_proposer(restart=1, pid=1):
    return Proposer(
        proposer_id=pid, num_acceptors=3, restart_counter=restart, max_lease_ms=5000
    )


def test_next_ballot_counts_from_one():
    p = make_proposer(restart=3, pid=1)
    assert p.next_ballot() == BallotNumber(3, 1, 1)
    assert p.next_ballot() == BallotNumber(3, 2, 1)


def test_next_ballot_after_restart_beats_all_prior():
    p = make_proposer(restart=3)
    history = [p.next_ballot() for _ in range(50)]
    restarted = make_proposer(restart=4)
    assert restarted.next_ballot() > max(history)


def test_next_ballot_running_max_oracle():
    """Brute-force oracle: over random call/restart sequences the running
    maximum of the history is always the latest ballot."""
    rng = random.Random(7)
    for _ in range(200):
        restart = 1
        p = make_proposer(restart=restart)
        history = []
        for _ in range(rng.randint(1, 40)):
            if rng.random() < 0.2:
                restart += 1  # simulated crash: counter bumped, run reset
                p = make_proposer(restart=restart)
            b = p.next_ballot()
            assert all(b > prior for prior in history)
            history.append(b)
            assert max(history) == b


def test_counter_overflow_is_fatal():
    p = make_proposer()
    p.run_counter = COUNTER_MAX
    with pytest.raises(BallotSpaceExhausted):
        p.next_ballot()
