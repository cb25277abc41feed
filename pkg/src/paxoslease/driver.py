"""Per-resource driver: routes events into the core state machines and
applies the retry policy around them.

The core proposer gives up on a round when it turns hopeless but never
decides when to try again; that is policy, and it lives here so the
simulator and the datagram transport behave identically.  The policy is:
a failed or stalled round is retried after a randomized backoff, a held
lease is refreshed halfway into its timespan, and a round that stays
silent for a whole timespan is written off by a watchdog.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .acceptor import Acceptor
from .effects import (
    BACKOFF_TIMER,
    EXPIRY_TIMER,
    EXTEND_TIMER,
    LEASE_TIMER,
    WATCHDOG_TIMER,
    CancelTimer,
    Effect,
    SetTimer,
    StatusChange,
)
from .messages import (
    PrepareRequest,
    PrepareResponse,
    ProposeRequest,
    ProposeResponse,
    ProtocolMessage,
    Release,
)
from .proposer import Phase, Proposer, backoff_delay


@dataclass
class Mission:
    """What the local application asked for on this resource."""

    timespan_ms: int
    hold: bool  # keep extending until released


class InstanceDriver:
    """Proposer and acceptor halves of one resource on one node."""

    def __init__(
        self,
        proposer: Proposer | None,
        acceptor: Acceptor | None,
        rng: random.Random,
    ):
        self.proposer = proposer
        self.acceptor = acceptor
        self.rng = rng
        self.mission: Mission | None = None
        self._watchdog_ballot = None
        self._backoff_pending = False
        self._extend_armed_for: int | None = None

    # -- inbound events ---------------------------------------------------

    def handle_message(
        self, msg: ProtocolMessage, sender: int, now_us: int
    ) -> list[Effect]:
        if isinstance(msg, PrepareRequest):
            return self._acceptor_effects(lambda a: a.on_prepare_request(msg, now_us))
        if isinstance(msg, ProposeRequest):
            return self._acceptor_effects(lambda a: a.on_propose_request(msg, now_us))
        if isinstance(msg, Release):
            return self._acceptor_effects(lambda a: a.on_release(msg, now_us))
        if self.proposer is None:
            return []
        if isinstance(msg, PrepareResponse):
            effects = self.proposer.on_prepare_response(msg, sender, now_us)
        elif isinstance(msg, ProposeResponse):
            effects = self.proposer.on_propose_response(msg, sender, now_us)
        else:
            return []
        return self._after_proposer_event(effects, now_us)

    def _acceptor_effects(self, call) -> list[Effect]:
        if self.acceptor is None:
            return []
        return call(self.acceptor)

    def handle_timer(self, timer_id: str, now_us: int) -> list[Effect]:
        if timer_id == EXPIRY_TIMER:
            return self._acceptor_effects(lambda a: a.on_expiry(now_us))
        if self.proposer is None:
            return []
        if timer_id == LEASE_TIMER:
            return self._after_proposer_event(
                self.proposer.on_lease_timeout(now_us), now_us
            )
        if timer_id == WATCHDOG_TIMER:
            return self._on_watchdog(now_us)
        if timer_id == BACKOFF_TIMER:
            self._backoff_pending = False
            if self.mission is not None and self.proposer.phase is Phase.IDLE:
                return self._start_round(now_us)
            return []
        if timer_id == EXTEND_TIMER:
            if (
                self.mission is not None
                and self.mission.hold
                and self.proposer.lease_owner
                and self.proposer.phase is Phase.IDLE
            ):
                return self._start_round(now_us)
            return []
        return []

    # -- commands ----------------------------------------------------------

    def handle_acquire(self, timespan_ms: int, hold: bool, now_us: int) -> list[Effect]:
        if self.proposer is None:
            return []
        self.mission = Mission(timespan_ms, hold)
        if self.proposer.phase is Phase.IDLE:
            return self._start_round(now_us)
        return []

    def handle_release(self, now_us: int) -> list[Effect]:
        self.mission = None
        if self.proposer is None:
            return []
        if self.proposer.lease_owner:
            return self.proposer.release()
        return self.proposer.abort_round()

    # -- policy ------------------------------------------------------------

    def _start_round(self, now_us: int) -> list[Effect]:
        assert self.proposer is not None and self.mission is not None
        effects = self.proposer.start_acquire(self.mission.timespan_ms, now_us)
        self._watchdog_ballot = self.proposer.ballot
        effects.append(SetTimer(WATCHDOG_TIMER, self.mission.timespan_ms * 1000))
        return self._after_proposer_event(effects, now_us)

    def _on_watchdog(self, now_us: int) -> list[Effect]:
        p = self.proposer
        assert p is not None
        if p.ballot is None or p.ballot != self._watchdog_ballot:
            return []
        if p.lease_owner and p.owned_ballot == p.ballot:
            return []  # round completed; nothing to write off
        effects = p.abort_round()
        return self._after_proposer_event(effects, now_us)

    def _after_proposer_event(
        self, effects: list[Effect], now_us: int
    ) -> list[Effect]:
        """Append policy effects after the core machine has spoken."""
        p = self.proposer
        assert p is not None
        if not p.lease_owner:
            self._extend_armed_for = None
        if self.mission is not None and p.lease_owner:
            if not self.mission.hold:
                self.mission = None  # one-shot acquire fulfilled
            elif (
                p.lease_deadline_us is not None
                and p.lease_deadline_us != self._extend_armed_for
            ):
                # Fresh lease or confirmed extension: refresh halfway into
                # the window.
                self._extend_armed_for = p.lease_deadline_us
                half = self.mission.timespan_ms * 1000 // 2
                delay = max(p.lease_deadline_us - now_us - half, 1)
                effects.append(SetTimer(EXTEND_TIMER, delay))
        if (
            self.mission is not None
            and p.phase is Phase.IDLE
            and not self._backoff_pending
            and (not p.lease_owner or self.mission.hold)
        ):
            # Round failed (rejected, overwritten, or written off): retry
            # after a randomized sleep so duelling proposers desynchronize.
            self._backoff_pending = True
            t_us = self.mission.timespan_ms * 1000
            effects.append(SetTimer(BACKOFF_TIMER, backoff_delay(self.rng, t_us)))
        return effects

    # -- bookkeeping ---------------------------------------------------------

    def is_blank(self) -> bool:
        proposer_blank = self.proposer is None or (
            self.proposer.phase is Phase.IDLE
            and not self.proposer.lease_owner
            and self.mission is None
        )
        acceptor_blank = self.acceptor is None or self.acceptor.is_blank()
        return proposer_blank and acceptor_blank
