"""The single-phase majority-vote baseline.

Proposers start a local timeout for T, then ask every acceptor for the
lease.  An acceptor with empty state grants and holds the grant for T; a
busy acceptor rejects.  A majority of grants makes the proposer owner
until its own timer runs out.  Correct, but contenders routinely split
the acceptors and block each other, which is the behavior the simulator
demonstrates against PaxosLease.

Rounds carry a sequence number so late responses from an abandoned round
are not miscounted; that is bookkeeping, not a ballot, and grants never
overwrite each other the way prepare rounds do.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..effects import (
    Broadcast,
    CancelTimer,
    Effect,
    SendTo,
    SetTimer,
    StatusChange,
)

NAIVE_LEASE_TIMER = "naive-lease"
NAIVE_EXPIRY_TIMER = "naive-expiry"


@dataclass(frozen=True, slots=True)
class NaiveRequest:
    proposer_id: int
    round: int
    timespan_ms: int


@dataclass(frozen=True, slots=True)
class NaiveResponse:
    round: int
    granted: bool


class NaiveInstance:
    """Proposer and acceptor halves of the baseline for one resource."""

    def __init__(self, node_id: int, num_acceptors: int, is_proposer: bool, is_acceptor: bool):
        self.node_id = node_id
        self.majority = num_acceptors // 2 + 1
        self.is_proposer = is_proposer
        self.is_acceptor = is_acceptor
        # proposer half
        self.round = 0
        self.active = False
        self.want = False
        self.timespan_ms = 0
        self.grants: set[int] = set()
        self.rejects: set[int] = set()
        self.num_acceptors = num_acceptors
        self.owner = False
        self.lease_deadline_us: int | None = None
        # acceptor half
        self.granted_to: int | None = None
        self.grant_expiry_us: int | None = None

    # -- proposer ----------------------------------------------------------

    def handle_acquire(self, timespan_ms: int, hold: bool, now_us: int) -> list[Effect]:
        self.want = True
        self.timespan_ms = timespan_ms
        return self._start_round(now_us)

    def handle_release(self, now_us: int) -> list[Effect]:
        self.want = False
        self.active = False
        effects: list[Effect] = []
        if self.owner:
            self.owner = False
            effects.append(StatusChange(False))
        return effects

    def _start_round(self, now_us: int) -> list[Effect]:
        self.round += 1
        self.active = True
        self.grants = set()
        self.rejects = set()
        self.lease_deadline_us = now_us + self.timespan_ms * 1000
        # Local timer first; the claim window must open before any
        # acceptor can start counting.
        return [
            SetTimer(NAIVE_LEASE_TIMER, self.timespan_ms * 1000),
            Broadcast(NaiveRequest(self.node_id, self.round, self.timespan_ms)),
        ]

    def handle_message(self, msg, sender: int, now_us: int) -> list[Effect]:
        if isinstance(msg, NaiveRequest):
            return self._on_request(msg, now_us)
        if isinstance(msg, NaiveResponse):
            return self._on_response(msg, sender, now_us)
        return []

    def _on_response(self, msg: NaiveResponse, sender: int, now_us: int) -> list[Effect]:
        if not self.is_proposer or not self.active or msg.round != self.round:
            return []
        if msg.granted:
            self.grants.add(sender)
            if len(self.grants) == self.majority and not self.owner:
                self.owner = True
                return [StatusChange(True)]
            return []
        self.rejects.add(sender)
        undecided = self.num_acceptors - len(self.grants) - len(self.rejects)
        if not self.owner and len(self.grants) + undecided < self.majority:
            # Round lost; wait out our own timer, then try again.
            self.active = False
        return []

    def handle_timer(self, timer_id: str, now_us: int) -> list[Effect]:
        if timer_id == NAIVE_LEASE_TIMER:
            effects: list[Effect] = []
            if self.owner:
                self.owner = False
                effects.append(StatusChange(False))
            self.active = False
            if self.want:
                effects.extend(self._start_round(now_us))
            return effects
        if timer_id == NAIVE_EXPIRY_TIMER:
            if self.grant_expiry_us is not None and now_us >= self.grant_expiry_us:
                self.granted_to = None
                self.grant_expiry_us = None
            return []
        return []

    # -- acceptor ----------------------------------------------------------

    def _on_request(self, msg: NaiveRequest, now_us: int) -> list[Effect]:
        if not self.is_acceptor:
            return []
        if self.granted_to is not None:
            return [SendTo(msg.proposer_id, NaiveResponse(msg.round, False))]
        self.granted_to = msg.proposer_id
        self.grant_expiry_us = now_us + msg.timespan_ms * 1000
        return [
            SetTimer(NAIVE_EXPIRY_TIMER, msg.timespan_ms * 1000),
            SendTo(msg.proposer_id, NaiveResponse(msg.round, True)),
        ]


class NaiveHost:
    """Dispatch-compatible stand-in for LeaseTable holding naive nodes."""

    def __init__(self, node_id: int, num_acceptors: int, is_proposer: bool, is_acceptor: bool):
        self.node_id = node_id
        self.num_acceptors = num_acceptors
        self.is_proposer = is_proposer
        self.is_acceptor = is_acceptor
        self.instances: dict[str, NaiveInstance] = {}

    def instance(self, resource: str) -> NaiveInstance:
        inst = self.instances.get(resource)
        if inst is None:
            inst = NaiveInstance(
                self.node_id, self.num_acceptors, self.is_proposer, self.is_acceptor
            )
            self.instances[resource] = inst
        return inst

    def dispatch(self, resource, event, now_us):
        from ..multilease import AcquireCommand, Deliver, ReleaseCommand, TimerFired

        inst = self.instance(resource)
        if isinstance(event, Deliver):
            effects = inst.handle_message(event.message, event.sender, now_us)
        elif isinstance(event, TimerFired):
            effects = inst.handle_timer(event.timer_id, now_us)
        elif isinstance(event, AcquireCommand):
            effects = inst.handle_acquire(event.timespan_ms, event.hold, now_us)
        elif isinstance(event, ReleaseCommand):
            effects = inst.handle_release(now_us)
        else:
            effects = []
        return [(resource, e) for e in effects]
