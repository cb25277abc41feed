"""PaxosLease: distributed lease negotiation without disk writes or clock
synchrony.

The package is layered: pure state machines (`proposer`, `acceptor`,
`driver`), the multi-resource table with the restart record
(`multilease`), a deterministic fault-injecting simulator (`simnet`), a
datagram codec and transport (`wire`), and operator entry points (`cli`).
"""

from .acceptor import Acceptor
from .driver import InstanceDriver, Mission
from .effects import (
    BACKOFF_TIMER,
    EXPIRY_TIMER,
    EXTEND_TIMER,
    LEASE_TIMER,
    WATCHDOG_TIMER,
    Broadcast,
    CancelTimer,
    Effect,
    SendTo,
    SetTimer,
    StatusChange,
)
from .messages import (
    ACCEPT,
    REJECT,
    BallotNumber,
    BallotSpaceExhausted,
    InvalidTimespanError,
    Lease,
    PrepareRequest,
    PrepareResponse,
    Proposal,
    ProposeRequest,
    ProposeResponse,
    ProtocolMessage,
    Release,
    ballot_compare,
    is_valid_resource_id,
)
from .multilease import (
    AcquireCommand,
    ClusterConfig,
    Deliver,
    FileRestartStore,
    LeaseTable,
    MemoryRestartStore,
    ReleaseCommand,
    RestartRecordError,
    TimerFired,
)
from .proposer import Phase, Proposer, backoff_delay

__version__ = "0.1.0"

__all__ = [
    "ACCEPT",
    "REJECT",
    "Acceptor",
    "AcquireCommand",
    "BACKOFF_TIMER",
    "BallotNumber",
    "BallotSpaceExhausted",
    "Broadcast",
    "CancelTimer",
    "ClusterConfig",
    "Deliver",
    "EXPIRY_TIMER",
    "EXTEND_TIMER",
    "Effect",
    "FileRestartStore",
    "InstanceDriver",
    "InvalidTimespanError",
    "LEASE_TIMER",
    "Lease",
    "LeaseTable",
    "MemoryRestartStore",
    "Mission",
    "Phase",
    "PrepareRequest",
    "PrepareResponse",
    "Proposal",
    "ProposeRequest",
    "ProposeResponse",
    "Proposer",
    "ProtocolMessage",
    "Release",
    "ReleaseCommand",
    "RestartRecordError",
    "SendTo",
    "SetTimer",
    "StatusChange",
    "TimerFired",
    "WATCHDOG_TIMER",
    "ballot_compare",
    "backoff_delay",
    "is_valid_resource_id",
]
