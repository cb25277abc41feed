"""Acceptor handler semantics: promises, proposals, expiry, release, and
the rejoin gate."""

import random

from paxoslease import (
    ACCEPT,
    REJECT,
    Acceptor,
    BallotNumber,
    CancelTimer,
    Lease,
    PrepareRequest,
    PrepareResponse,
    Proposal,
    ProposeRequest,
    ProposeResponse,
    Release,
    SendTo,
    SetTimer,
)

B = BallotNumber
MS = 1000  # us per ms


def test_blank_acceptor_accepts_any_prepare():
    a = Acceptor()
    effects = a.on_prepare_request(PrepareRequest(B(1, 1, 4)), now_us=0)
    assert effects == [SendTo(4, PrepareResponse(B(1, 1, 4), ACCEPT, None))]
    assert a.highest_promised == B(1, 1, 4)


def test_lower_ballot_prepare_rejected_state_unchanged():
    a = Acceptor(highest_promised=B(2, 1, 1))
    effects = a.on_prepare_request(PrepareRequest(B(1, 9, 9)), now_us=0)
    assert effects == [SendTo(9, PrepareResponse(B(1, 9, 9), REJECT))]
    assert a.highest_promised == B(2, 1, 1)
    assert a.accepted_proposal is None


def test_silent_mode_drops_instead_of_rejecting():
    a = Acceptor(reply_rejects=False, highest_promised=B(2, 1, 1))
    assert a.on_prepare_request(PrepareRequest(B(1, 9, 9)), now_us=0) == []
    assert a.on_propose_request(
        ProposeRequest(B(1, 9, 9), Lease(9, 1000)), now_us=0
    ) == []


def test_equal_ballot_prepare_is_idempotent():
    a = Acceptor(highest_promised=B(2, 1, 1))
    effects = a.on_prepare_request(PrepareRequest(B(2, 1, 1)), now_us=0)
    assert effects == [SendTo(1, PrepareResponse(B(2, 1, 1), ACCEPT, None))]


def test_prepare_response_carries_stored_lease():
    a = Acceptor()
    a.on_propose_request(ProposeRequest(B(1, 1, 2), Lease(2, 2000)), now_us=0)
    effects = a.on_prepare_request(PrepareRequest(B(1, 2, 3)), now_us=100)
    assert effects == [SendTo(3, PrepareResponse(B(1, 2, 3), ACCEPT, Lease(2, 2000)))]


def test_propose_accepted_at_promised_ballot_sets_expiry():
    a = Acceptor(highest_promised=B(3, 1, 1))
    now = 500 * MS
    effects = a.on_propose_request(ProposeRequest(B(3, 1, 1), Lease(1, 2000)), now)
    assert effects == [
        SetTimer("expiry", 2000 * MS),
        SendTo(1, ProposeResponse(B(3, 1, 1), ACCEPT)),
    ]
    assert a.accepted_proposal == Proposal(B(3, 1, 1), Lease(1, 2000))
    assert a.expiry_deadline_us == now + 2000 * MS


def test_propose_below_promise_rejected():
    a = Acceptor(highest_promised=B(3, 1, 1))
    effects = a.on_propose_request(ProposeRequest(B(2, 5, 2), Lease(2, 2000)), 0)
    assert effects == [SendTo(2, ProposeResponse(B(2, 5, 2), REJECT))]
    assert a.accepted_proposal is None


def test_higher_propose_discards_previous_and_restarts_timer():
    a = Acceptor()
    a.on_propose_request(ProposeRequest(B(1, 1, 1), Lease(1, 2000)), now_us=0)
    effects = a.on_propose_request(ProposeRequest(B(1, 1, 2), Lease(2, 1500)), 800 * MS)
    assert effects[0] == SetTimer("expiry", 1500 * MS)
    assert a.accepted_proposal == Proposal(B(1, 1, 2), Lease(2, 1500))
    assert a.expiry_deadline_us == 800 * MS + 1500 * MS


def test_promise_never_lowered_by_accepting():
    a = Acceptor(highest_promised=B(1, 1, 1))
    a.on_propose_request(ProposeRequest(B(1, 1, 1), Lease(1, 2000)), 0)
    assert a.highest_promised == B(1, 1, 1)
    a.on_prepare_request(PrepareRequest(B(1, 2, 1)), 0)
    assert a.highest_promised == B(1, 2, 1)


def test_promise_nondecreasing_under_random_traffic():
    """Property: over any reachable message sequence the promise watermark
    never moves backward within one run."""
    rng = random.Random(11)
    for _ in range(100):
        a = Acceptor(reply_rejects=rng.random() < 0.5)
        watermark = None
        now = 0
        for _ in range(60):
            now += rng.randint(0, 2000) * MS
            b = B(rng.randint(0, 2), rng.randint(0, 5), rng.randint(1, 3))
            kind = rng.random()
            if kind < 0.4:
                a.on_prepare_request(PrepareRequest(b), now)
            elif kind < 0.8:
                a.on_propose_request(ProposeRequest(b, Lease(b.proposer_id, 1000)), now)
            elif kind < 0.9:
                a.on_release(Release(b), now)
            else:
                a.on_expiry(now)
            if watermark is not None:
                assert a.highest_promised is not None
                assert a.highest_promised >= watermark
            watermark = a.highest_promised


# -- expiry ------------------------------------------------------------------


def expired_setup():
    a = Acceptor()
    a.on_propose_request(ProposeRequest(B(1, 1, 1), Lease(1, 2000)), now_us=0)
    return a


def test_expiry_clears_proposal_keeps_promise():
    a = expired_setup()
    a.on_expiry(2000 * MS)
    assert a.accepted_proposal is None
    assert a.expiry_deadline_us is None
    assert a.highest_promised == B(1, 1, 1)


def test_stale_expiry_after_deadline_moved_is_noop():
    a = expired_setup()
    # Re-acceptance moved the deadline; the old timer fires spuriously.
    a.on_propose_request(ProposeRequest(B(1, 2, 1), Lease(1, 2000)), 1000 * MS)
    a.on_expiry(2000 * MS)
    assert a.accepted_proposal is not None
    a.on_expiry(3000 * MS)
    assert a.accepted_proposal is None


def test_expiry_then_prepare_reports_empty():
    # Hand-traced two-step scenario: accepted at t=0 with T=2000ms, a
    # prepare before expiry sees the proposal, one after sees empty.
    a = expired_setup()
    before = a.on_prepare_request(PrepareRequest(B(1, 5, 3)), 1999 * MS)
    assert before[0].message.proposal == Lease(1, 2000)
    a.on_expiry(2000 * MS)
    after = a.on_prepare_request(PrepareRequest(B(1, 6, 3)), 2001 * MS)
    assert after[0].message.proposal is None


# -- release -----------------------------------------------------------------


def test_release_matching_ballot_clears_state():
    a = expired_setup()
    effects = a.on_release(Release(B(1, 1, 1)), now_us=500 * MS)
    assert effects == [CancelTimer("expiry")]
    assert a.accepted_proposal is None
    assert a.expiry_deadline_us is None
    assert a.highest_promised == B(1, 1, 1)


def test_release_non_matching_ballot_does_nothing():
    a = expired_setup()
    a.on_release(Release(B(1, 2, 1)), now_us=500 * MS)
    assert a.accepted_proposal is not None


def test_release_on_empty_state_does_nothing():
    a = Acceptor()
    assert a.on_release(Release(B(1, 1, 1)), now_us=0) == []
    assert a.is_blank()


# -- restart gate -------------------------------------------------------------


def test_restart_gate_drops_messages_before_deadline():
    a = Acceptor.after_restart(now_us=0, max_lease_ms=5000)
    assert a.on_prepare_request(PrepareRequest(B(1, 1, 1)), 4999 * MS) == []
    assert a.highest_promised is None


def test_restart_gate_boundary_inclusive_rejoin():
    a = Acceptor.after_restart(now_us=0, max_lease_ms=5000)
    effects = a.on_prepare_request(PrepareRequest(B(1, 1, 1)), 5000 * MS)
    assert effects == [SendTo(1, PrepareResponse(B(1, 1, 1), ACCEPT, None))]


def test_restart_state_is_blank_apart_from_gate():
    a = Acceptor.after_restart(now_us=100, max_lease_ms=5000)
    assert a.highest_promised is None
    assert a.accepted_proposal is None
    assert not a.is_blank()  # gate still armed
