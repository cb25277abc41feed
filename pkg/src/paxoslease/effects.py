"""Effect values returned by state machine handlers.

Handlers never touch a socket, a clock, or a timer wheel.  They return a
list of effects and the runtime that drives them (simulator or datagram
transport) executes the list in order.  Ordering is load-bearing in two
places: the proposer's lease timer must be armed before its propose
requests go out, and a release status flip must precede the release
broadcast.
"""

from __future__ import annotations

from dataclasses import dataclass

from .messages import ProtocolMessage

# Timer ids used by the core state machines and the per-resource driver.
LEASE_TIMER = "lease"
EXPIRY_TIMER = "expiry"
WATCHDOG_TIMER = "watchdog"
BACKOFF_TIMER = "backoff"
EXTEND_TIMER = "extend"


@dataclass(frozen=True, slots=True)
class Broadcast:
    """Send the message to every acceptor."""

    message: ProtocolMessage


@dataclass(frozen=True, slots=True)
class SendTo:
    """Send the message to one peer, identified by node id."""

    node_id: int
    message: ProtocolMessage


@dataclass(frozen=True, slots=True)
class SetTimer:
    """Arm (or re-arm) the named timer to fire after delay_us."""

    timer_id: str
    delay_us: int


@dataclass(frozen=True, slots=True)
class CancelTimer:
    timer_id: str


@dataclass(frozen=True, slots=True)
class StatusChange:
    """Edge-triggered lease ownership transition; emitted only on flips."""

    lease_owner: bool


Effect = Broadcast | SendTo | SetTimer | CancelTimer | StatusChange
