"""Many independent lease instances keyed by resource id, plus the one
piece of stable storage the protocol needs: the proposer restart counter.

Instances share nothing.  The acceptor rejoin gate is process-wide: all
instances lost their volatile state together, so one restart timestamp
guards them all.
"""

from __future__ import annotations

import os
import random
from dataclasses import dataclass

from .acceptor import Acceptor
from .driver import InstanceDriver
from .effects import Effect
from .messages import ProtocolMessage, is_valid_resource_id
from .proposer import Phase, Proposer


class RestartRecordError(Exception):
    """The restart record is unreadable; ballot monotonicity cannot be
    guaranteed, so starting up would be unsafe."""


class RestartStore:
    """Monotonic restart counter on stable storage."""

    def load_and_bump(self) -> int:
        raise NotImplementedError


class FileRestartStore(RestartStore):
    """Single ASCII integer plus newline, replaced atomically.

    The bumped value is durable before it is returned, so a crash between
    the write and the first ballot can only skip counters, never reuse one.
    """

    def __init__(self, path: str):
        self.path = path

    def load_and_bump(self) -> int:
        previous = 0
        try:
            with open(self.path, "r", encoding="ascii") as f:
                raw = f.read()
            previous = int(raw.strip())
            if previous < 0:
                raise ValueError(raw)
        except FileNotFoundError:
            previous = 0
        except (ValueError, UnicodeDecodeError) as exc:
            raise RestartRecordError(f"corrupt restart record {self.path!r}: {exc}")
        value = previous + 1
        tmp = self.path + ".tmp"
        with open(tmp, "w", encoding="ascii") as f:
            f.write(f"{value}\n")
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, self.path)
        return value

    def peek(self) -> int:
        try:
            with open(self.path, "r", encoding="ascii") as f:
                return int(f.read().strip())
        except FileNotFoundError:
            return 0


class MemoryRestartStore(RestartStore):
    """In-memory stand-in for simulations; survives simulated crashes the
    way a file survives real ones."""

    def __init__(self):
        self.value = 0

    def load_and_bump(self) -> int:
        self.value += 1
        return self.value


# -- events routed through the table ----------------------------------------


@dataclass(frozen=True, slots=True)
class Deliver:
    message: ProtocolMessage
    sender: int


@dataclass(frozen=True, slots=True)
class TimerFired:
    timer_id: str


@dataclass(frozen=True, slots=True)
class AcquireCommand:
    timespan_ms: int
    hold: bool = False


@dataclass(frozen=True, slots=True)
class ReleaseCommand:
    pass


Event = Deliver | TimerFired | AcquireCommand | ReleaseCommand


@dataclass
class ClusterConfig:
    """Static cluster membership; identical on every node."""

    node_id: int
    acceptor_ids: tuple[int, ...]
    max_lease_ms: int
    is_proposer: bool = True
    is_acceptor: bool = True
    reply_rejects: bool = True

    @property
    def num_acceptors(self) -> int:
        return len(self.acceptor_ids)


class LeaseTable:
    """All lease instances of one node, single-writer.

    Instances are created on first use; a blank instance is
    indistinguishable from an absent one, which is what makes garbage
    collection semantically invisible.
    """

    def __init__(
        self,
        config: ClusterConfig,
        restart_counter: int,
        rng: random.Random | None = None,
        boot_us: int = 0,
        gate_acceptors: bool = False,
    ):
        self.config = config
        self.restart_counter = restart_counter
        self.rng = rng or random.Random()
        self.instances: dict[str, InstanceDriver] = {}
        self._last_activity: dict[str, int] = {}
        self.dropped_malformed = 0
        # Process-wide rejoin gate; None means the node came up into a
        # world known to hold no prior leases (simulated genesis).
        self._gate_until_us: int | None = (
            boot_us + config.max_lease_ms * 1000 if gate_acceptors else None
        )

    def _new_instance(self) -> InstanceDriver:
        cfg = self.config
        proposer = None
        acceptor = None
        if cfg.is_proposer:
            proposer = Proposer(
                proposer_id=cfg.node_id,
                num_acceptors=cfg.num_acceptors,
                restart_counter=self.restart_counter,
                max_lease_ms=cfg.max_lease_ms,
            )
        if cfg.is_acceptor:
            acceptor = Acceptor(reply_rejects=cfg.reply_rejects)
            if self._gate_until_us is not None:
                acceptor.rejoin_deadline_us = self._gate_until_us
        return InstanceDriver(proposer, acceptor, self.rng)

    def instance(self, resource: str) -> InstanceDriver:
        inst = self.instances.get(resource)
        if inst is None:
            inst = self._new_instance()
            self.instances[resource] = inst
        return inst

    def dispatch(
        self, resource: str, event: Event, now_us: int
    ) -> list[tuple[str, Effect]]:
        """Route one event to its instance; effects come back tagged with
        the resource so the runtime can address timers and frames."""
        if not is_valid_resource_id(resource):
            self.dropped_malformed += 1
            return []
        inst = self.instance(resource)
        self._last_activity[resource] = now_us
        if isinstance(event, Deliver):
            effects = inst.handle_message(event.message, event.sender, now_us)
        elif isinstance(event, TimerFired):
            effects = inst.handle_timer(event.timer_id, now_us)
        elif isinstance(event, AcquireCommand):
            effects = inst.handle_acquire(event.timespan_ms, event.hold, now_us)
        elif isinstance(event, ReleaseCommand):
            effects = inst.handle_release(now_us)
        else:
            raise TypeError(f"unknown event {event!r}")
        return [(resource, e) for e in effects]

    def gc_idle_instances(self, now_us: int) -> int:
        """Drop instances that are blank and have been idle for longer
        than M.  Returns how many were removed."""
        horizon = self.config.max_lease_ms * 1000
        dead = [
            r
            for r, inst in self.instances.items()
            if inst.is_blank() and now_us - self._last_activity.get(r, now_us) > horizon
        ]
        for r in dead:
            del self.instances[r]
            self._last_activity.pop(r, None)
        return len(dead)

    # -- memory budget -----------------------------------------------------

    def serialized_state(self, resource: str) -> bytes:
        """Compact canonical encoding of one instance's protocol state,
        including the resource key; used for the footprint budget."""
        inst = self.instances[resource]
        parts = [resource]
        p = inst.proposer
        if p is not None and (p.phase is not Phase.IDLE or p.lease_owner):
            parts.append(
                "P|%s|%s|%d|%d|%s|%s|%s"
                % (
                    p.ballot or "-",
                    p.phase.value[:4],
                    p.num_open,
                    p.num_accepted,
                    int(p.lease_owner),
                    p.lease_deadline_us or "-",
                    p.owned_ballot or "-",
                )
            )
        a = inst.acceptor
        if a is not None and not a.is_blank():
            accepted = "-"
            if a.accepted_proposal is not None:
                pr = a.accepted_proposal
                accepted = "%s:%d:%d" % (
                    pr.ballot,
                    pr.lease.proposer_id,
                    pr.lease.timespan_ms,
                )
            parts.append(
                "A|%s|%s|%s" % (a.highest_promised or "-", accepted, a.expiry_deadline_us or "-")
            )
        return "\n".join(parts).encode("ascii")
