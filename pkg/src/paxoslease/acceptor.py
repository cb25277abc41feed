"""Acceptor state machine.

An acceptor holds at most two facts: the highest ballot number it promised
and the proposal it currently stores (with the virtual deadline at which
that proposal evaporates).  Nothing is written to stable storage; a
restarted acceptor instead stays silent for the maximal lease time M so
that anything it may have voted for has expired before it speaks again.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .effects import EXPIRY_TIMER, CancelTimer, Effect, SendTo, SetTimer
from .messages import (
    ACCEPT,
    REJECT,
    BallotNumber,
    PrepareRequest,
    PrepareResponse,
    Proposal,
    ProposeRequest,
    ProposeResponse,
    Release,
)


@dataclass
class Acceptor:
    """One resource's acceptor half.

    reply_rejects selects between answering a stale ballot with a reject
    response or staying silent; both are allowed and safety does not
    depend on the choice.
    """

    reply_rejects: bool = True
    highest_promised: BallotNumber | None = None
    accepted_proposal: Proposal | None = None
    expiry_deadline_us: int | None = None
    rejoin_deadline_us: int | None = None
    # Counters for traces and the memory budget check.
    prepares_seen: int = field(default=0, repr=False)
    proposes_seen: int = field(default=0, repr=False)

    @classmethod
    def after_restart(cls, now_us: int, max_lease_ms: int, reply_rejects: bool = True) -> "Acceptor":
        """Blank state plus the rejoin gate: silent until now + M."""
        return cls(
            reply_rejects=reply_rejects,
            rejoin_deadline_us=now_us + max_lease_ms * 1000,
        )

    def gated(self, now_us: int) -> bool:
        # The gate is inclusive of its end: at exactly the deadline the
        # acceptor speaks again.
        return self.rejoin_deadline_us is not None and now_us < self.rejoin_deadline_us

    def is_blank(self) -> bool:
        return (
            self.highest_promised is None
            and self.accepted_proposal is None
            and self.rejoin_deadline_us is None
        )

    def on_prepare_request(self, msg: PrepareRequest, now_us: int) -> list[Effect]:
        if self.gated(now_us):
            return []
        self.prepares_seen += 1
        requester = msg.ballot.proposer_id
        if self.highest_promised is not None and msg.ballot < self.highest_promised:
            if self.reply_rejects:
                return [SendTo(requester, PrepareResponse(msg.ballot, REJECT))]
            return []
        # Equal ballots pass the guard so a duplicated prepare re-answers
        # idempotently.
        self.highest_promised = msg.ballot
        stored = self.accepted_proposal.lease if self.accepted_proposal else None
        return [SendTo(requester, PrepareResponse(msg.ballot, ACCEPT, stored))]

    def on_propose_request(self, msg: ProposeRequest, now_us: int) -> list[Effect]:
        if self.gated(now_us):
            return []
        self.proposes_seen += 1
        requester = msg.ballot.proposer_id
        if self.highest_promised is not None and msg.ballot < self.highest_promised:
            if self.reply_rejects:
                return [SendTo(requester, ProposeResponse(msg.ballot, REJECT))]
            return []
        # A previously stored proposal is discarded here; the highest
        # promised ballot is never lowered, only the proposal turns over.
        self.highest_promised = msg.ballot
        self.accepted_proposal = Proposal(msg.ballot, msg.lease)
        self.expiry_deadline_us = now_us + msg.lease.timespan_ms * 1000
        return [
            SetTimer(EXPIRY_TIMER, msg.lease.timespan_ms * 1000),
            SendTo(requester, ProposeResponse(msg.ballot, ACCEPT)),
        ]

    def on_expiry(self, now_us: int) -> list[Effect]:
        """Clear the stored proposal once its deadline passed.

        A timer that was outrun by a newer proposal (deadline moved later)
        is stale and ignored.
        """
        if self.expiry_deadline_us is None or now_us < self.expiry_deadline_us:
            return []
        self.accepted_proposal = None
        self.expiry_deadline_us = None
        return []

    def on_release(self, msg: Release, now_us: int) -> list[Effect]:
        if self.gated(now_us):
            return []
        if (
            self.accepted_proposal is not None
            and self.accepted_proposal.ballot == msg.ballot
        ):
            self.accepted_proposal = None
            self.expiry_deadline_us = None
            return [CancelTimer(EXPIRY_TIMER)]
        # Non-matching ballot or empty state: do nothing.
        return []
