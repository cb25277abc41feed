"""Proposer state machine.

The proposer runs two-phase rounds: prepare discovers whether a majority
of acceptors are open, propose installs the lease.  Its claim window is
anchored at the instant the prepare majority completes, strictly before
the propose requests leave the machine, which is what makes the acceptors'
expiry timers outlive the proposer's own claim.

Extension rounds reuse the same machinery with two twists: acceptors that
still hold this proposer's live lease count as open, and the new claim
window (anchored at the extension's prepare majority) only becomes the
effective deadline once a majority has actually installed the new
proposal.  Until then ownership runs on the old deadline, so a lost
propose wave can never stretch the claim past what acceptors back.

A round that can no longer reach a majority (enough rejects or foreign
proposals came back) collapses to the idle phase; the retry-with-backoff
policy around failed rounds lives in the driver, not here.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum

from .effects import (
    LEASE_TIMER,
    Broadcast,
    CancelTimer,
    Effect,
    SetTimer,
    StatusChange,
)
from .messages import (
    COUNTER_MAX,
    BallotNumber,
    BallotSpaceExhausted,
    Lease,
    PrepareRequest,
    PrepareResponse,
    ProposeRequest,
    ProposeResponse,
    Release,
    validate_timespan,
)


class Phase(Enum):
    IDLE = "idle"
    PREPARING = "preparing"
    PROPOSING = "proposing"


@dataclass
class Proposer:
    """One resource's proposer half for a single node.

    majority is fixed at construction from the acceptor count; the
    acceptor set never changes during a process lifetime.
    """

    proposer_id: int
    num_acceptors: int
    restart_counter: int
    max_lease_ms: int
    run_counter: int = 0

    ballot: BallotNumber | None = None
    phase: Phase = Phase.IDLE
    requested_timespan_ms: int = 0
    lease_owner: bool = False
    lease_deadline_us: int | None = None
    # Extension window anchored at the new prepare majority, effective
    # only once the new proposal is installed at a majority.
    pending_deadline_us: int | None = None
    # Ballot of the lease a majority actually installed; this is what a
    # release message must name, and it can trail self.ballot while an
    # extension round is in flight.
    owned_ballot: BallotNumber | None = None
    acquired_at_us: int | None = None

    # Response bookkeeping for the current round.  Acceptors are counted
    # once per ballot by identity, so retransmitted or duplicated
    # responses cannot fake a majority.
    open_acceptors: set[int] = field(default_factory=set)
    accept_acceptors: set[int] = field(default_factory=set)
    responders: set[int] = field(default_factory=set)

    @property
    def majority(self) -> int:
        return self.num_acceptors // 2 + 1

    @property
    def num_open(self) -> int:
        return len(self.open_acceptors)

    @property
    def num_accepted(self) -> int:
        return len(self.accept_acceptors)

    def next_ballot(self) -> BallotNumber:
        if self.run_counter >= COUNTER_MAX:
            raise BallotSpaceExhausted(
                f"proposer {self.proposer_id} exhausted run counters"
            )
        self.run_counter += 1
        return BallotNumber(self.restart_counter, self.run_counter, self.proposer_id)

    # -- round entry points --------------------------------------------

    def start_acquire(self, timespan_ms: int, now_us: int) -> list[Effect]:
        """Open a new round: fresh ballot, prepare broadcast.

        While this proposer still owns a live lease the round doubles as
        an extension; ownership is retained under the old deadline until
        the new round confirms.
        """
        validate_timespan(timespan_ms, self.max_lease_ms)
        self.ballot = self.next_ballot()
        self.phase = Phase.PREPARING
        self.requested_timespan_ms = timespan_ms
        self.pending_deadline_us = None
        self.open_acceptors = set()
        self.accept_acceptors = set()
        self.responders = set()
        return [Broadcast(PrepareRequest(self.ballot))]

    def start_extend(self, timespan_ms: int, now_us: int) -> list[Effect]:
        """Extension round; without a live lease this is simply a plain
        acquire (the own-lease counting clause self-gates on ownership)."""
        return self.start_acquire(timespan_ms, now_us)

    # -- response handlers ----------------------------------------------

    def on_prepare_response(
        self, msg: PrepareResponse, sender: int, now_us: int
    ) -> list[Effect]:
        if self.phase is not Phase.PREPARING or msg.ballot != self.ballot:
            return []  # some other proposal
        if sender in self.responders:
            return []
        self.responders.add(sender)
        if msg.accepted and self._counts_as_open(msg.proposal, now_us):
            self.open_acceptors.add(sender)
            if self.num_open >= self.majority:
                return self._prepare_majority(now_us)
        if self._round_hopeless(self.num_open):
            self._abandon_round()
        return []

    def _counts_as_open(self, proposal: Lease | None, now_us: int) -> bool:
        if proposal is None:
            return True
        # Extension rule: an acceptor still holding our own lease is as
        # good as open, but only while we are in fact the live owner.
        return (
            proposal.proposer_id == self.proposer_id
            and self.lease_owner
            and self.lease_deadline_us is not None
            and now_us < self.lease_deadline_us
        )

    def _prepare_majority(self, now_us: int) -> list[Effect]:
        t_ms = self.requested_timespan_ms
        self.phase = Phase.PROPOSING
        self.responders = set()
        lease = Lease(self.proposer_id, t_ms)
        assert self.ballot is not None
        request = Broadcast(ProposeRequest(self.ballot, lease))
        if self.lease_owner:
            # Extension: anchor the new window here but keep running on
            # the old deadline until a majority installs the proposal.
            self.pending_deadline_us = now_us + t_ms * 1000
            return [request]
        self.lease_deadline_us = now_us + t_ms * 1000
        # Timer before broadcast: the claim must expire no later than any
        # acceptor state this round installs.
        return [SetTimer(LEASE_TIMER, t_ms * 1000), request]

    def on_propose_response(
        self, msg: ProposeResponse, sender: int, now_us: int
    ) -> list[Effect]:
        if self.phase is not Phase.PROPOSING or msg.ballot != self.ballot:
            return []
        if sender in self.responders:
            return []
        self.responders.add(sender)
        if msg.accepted:
            self.accept_acceptors.add(sender)
            if self.num_accepted == self.majority:
                return self._propose_majority(now_us)
            return []
        if self._round_hopeless(self.num_accepted):
            effects: list[Effect] = []
            if not self.lease_owner:
                effects.append(CancelTimer(LEASE_TIMER))
            self._abandon_round()
            return effects
        return []

    def _propose_majority(self, now_us: int) -> list[Effect]:
        if self.lease_owner:
            # Extension confirmed: the pending window becomes effective.
            self.owned_ballot = self.ballot
            if self.pending_deadline_us is not None:
                self.lease_deadline_us = self.pending_deadline_us
                self.pending_deadline_us = None
                return [SetTimer(LEASE_TIMER, self.lease_deadline_us - now_us)]
            return []
        # The instant the majority completes is the acquisition instant;
        # recorded for traces and metrics.
        self.lease_owner = True
        self.owned_ballot = self.ballot
        self.acquired_at_us = now_us
        return [StatusChange(True)]

    def _round_hopeless(self, favorable: int) -> bool:
        outstanding = self.num_acceptors - len(self.responders)
        return favorable + outstanding < self.majority

    def _abandon_round(self) -> None:
        # Ownership is untouched: an extension round may fail while the
        # previous lease is still live and backed by acceptor state.
        self.ballot = None
        self.phase = Phase.IDLE
        self.pending_deadline_us = None
        if not self.lease_owner:
            self.lease_deadline_us = None

    def abort_round(self) -> list[Effect]:
        """Write off the in-flight round without touching ownership.

        Used by the driver when a round stalls; abandoning early is always
        safe because ownership is only ever granted by a propose majority.
        """
        if self.phase is Phase.IDLE:
            return []
        armed = self.phase is Phase.PROPOSING and not self.lease_owner
        self._abandon_round()
        return [CancelTimer(LEASE_TIMER)] if armed else []

    # -- timers and release ----------------------------------------------

    def on_lease_timeout(self, now_us: int) -> list[Effect]:
        """The claim window closed: forget the round and the ownership.

        A timer superseded by a confirmed extension (deadline moved
        later) is stale and ignored.
        """
        if self.lease_deadline_us is None or now_us < self.lease_deadline_us:
            return []
        self.ballot = None
        self.phase = Phase.IDLE
        self.lease_deadline_us = None
        self.pending_deadline_us = None
        self.owned_ballot = None
        was_owner = self.lease_owner
        self.lease_owner = False
        return [StatusChange(False)] if was_owner else []

    def release(self) -> list[Effect]:
        """Give the lease up early.  Not the owner: no-op.

        The internal flip happens before the release messages exist, so
        there is never an instant where the wire says released while the
        node still claims ownership.
        """
        if not self.lease_owner:
            return []
        ballot = self.owned_ballot
        self.lease_owner = False
        self.lease_deadline_us = None
        self.pending_deadline_us = None
        self.owned_ballot = None
        self.ballot = None
        self.phase = Phase.IDLE
        effects: list[Effect] = [StatusChange(False), CancelTimer(LEASE_TIMER)]
        if ballot is not None:
            effects.append(Broadcast(Release(ballot)))
        return effects


def backoff_delay(rng: random.Random, timespan_us: int) -> int:
    """Uniform random retry delay in [T/2, 3T/2] for a failed round."""
    return rng.randint(timespan_us // 2, 3 * timespan_us // 2)
