"""Domain types shared by every layer: ballots, leases, protocol messages.

All timestamps and deadlines in this package are integer microseconds on a
monotonic virtual or real clock.  Lease timespans are integer milliseconds,
because that is the granularity transmitted on the wire; the `_ms` / `_us`
suffixes mark the unit everywhere a value crosses a boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

# Ballot counters must fit a signed 64-bit integer so that ballots stay
# bounded on the wire.  Exceeding it means the ballot space is exhausted.
COUNTER_MAX = 2**63 - 1


class BallotSpaceExhausted(Exception):
    """A ballot counter passed COUNTER_MAX; the node cannot propose again."""


class InvalidTimespanError(ValueError):
    """Requested lease timespan is outside 0 < T < M."""


@dataclass(frozen=True, order=True, slots=True)
class BallotNumber:
    """Globally unique, per-proposer monotonic round identifier.

    Field order carries the comparison semantics: restart counter is the
    most significant component so that ballots keep increasing across
    proposer restarts, then the per-run counter, then the proposer id as
    the tiebreak that makes ballots from distinct proposers never equal.
    """

    restart_counter: int
    run_counter: int
    proposer_id: int

    def __str__(self) -> str:
        return f"{self.restart_counter}.{self.run_counter}.{self.proposer_id}"


def ballot_compare(a: BallotNumber, b: BallotNumber) -> int:
    """Total order on ballots: -1 if a < b, 0 if equal, +1 if a > b."""
    if a < b:
        return -1
    if a > b:
        return 1
    return 0


@dataclass(frozen=True, slots=True)
class Lease:
    """Who wants to own the resource and for how long."""

    proposer_id: int
    timespan_ms: int


@dataclass(frozen=True, slots=True)
class Proposal:
    """A ballot number and a lease together; what acceptors store."""

    ballot: BallotNumber
    lease: Lease


# -- The five wire messages ------------------------------------------------
#
# Responses do not carry the responder's identity; the transport layer knows
# who a datagram came from and hands the sender id to the state machine
# alongside the message.

ACCEPT = True
REJECT = False


@dataclass(frozen=True, slots=True)
class PrepareRequest:
    ballot: BallotNumber


@dataclass(frozen=True, slots=True)
class PrepareResponse:
    ballot: BallotNumber
    accepted: bool
    # Lease portion of the acceptor's stored proposal; None when the
    # acceptor is open.  Reject responses never carry a proposal.
    proposal: Lease | None = None


@dataclass(frozen=True, slots=True)
class ProposeRequest:
    ballot: BallotNumber
    lease: Lease


@dataclass(frozen=True, slots=True)
class ProposeResponse:
    ballot: BallotNumber
    accepted: bool


@dataclass(frozen=True, slots=True)
class Release:
    ballot: BallotNumber


ProtocolMessage = (
    PrepareRequest | PrepareResponse | ProposeRequest | ProposeResponse | Release
)


def is_valid_resource_id(resource: str) -> bool:
    """Resource ids are opaque tokens: 1..128 bytes of printable ASCII, no
    whitespace.  Equality is byte equality."""
    if not 1 <= len(resource) <= 128:
        return False
    return all(0x21 <= ord(c) <= 0x7E for c in resource)


def validate_timespan(timespan_ms: int, max_lease_ms: int) -> None:
    if not 0 < timespan_ms < max_lease_ms:
        raise InvalidTimespanError(
            f"timespan {timespan_ms}ms outside (0, {max_lease_ms}ms)"
        )
