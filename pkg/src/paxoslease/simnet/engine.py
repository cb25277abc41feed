"""Deterministic discrete-event simulator driving the lease state machines
under injected faults.

One seeded generator decides every message fate in send order, delivery
ties break by insertion sequence, and virtual time only moves forward, so
identical (seed, plan, scenario) inputs replay to identical traces, byte
for byte.

Clock drift is modeled as a per-node rate multiplier: handlers see a local
clock, timer durations stretch or shrink accordingly, and the trace (the
omniscient observer) stays on global virtual time.  Safety claims are
asserted at rate 1.0 only.
"""

from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass, field

from ..effects import (
    EXPIRY_TIMER,
    LEASE_TIMER,
    Broadcast,
    CancelTimer,
    SendTo,
    SetTimer,
    StatusChange,
)
from ..messages import (
    PrepareRequest,
    PrepareResponse,
    ProposeRequest,
    ProposeResponse,
    Release,
)
from ..multilease import (
    AcquireCommand,
    ClusterConfig,
    Deliver,
    LeaseTable,
    MemoryRestartStore,
    ReleaseCommand,
    TimerFired,
)
from .faults import FaultPlan, FateSampler
from .naive import NaiveHost, NaiveRequest, NaiveResponse
from .scenario import Command, Scenario

# Event kinds in the queue.
_DELIVER, _TIMER, _COMMAND, _CRASH, _RESTART = range(5)

_KIND_TAGS = {
    PrepareRequest: "PRQ",
    PrepareResponse: "PRS",
    ProposeRequest: "POQ",
    ProposeResponse: "POS",
    Release: "REL",
    NaiveRequest: "NRQ",
    NaiveResponse: "NRS",
}

MUT_NO_LEASE_TIMEOUT = "no-lease-timeout"
MUT_EARLY_EXPIRY = "early-expiry"


@dataclass
class Trace:
    """Structured event trace plus counters; text rendering is derived."""

    scenario: str
    seed: int
    records: list[tuple] = field(default_factory=list)
    end: str = "quiescent"
    end_us: int = 0
    broadcasts: dict[int, int] = field(default_factory=dict)
    sends: int = 0
    drops: int = 0
    duplicates: int = 0
    deliveries: int = 0

    def render(self) -> str:
        lines = [f"# scenario={self.scenario} seed={self.seed}"]
        for rec in self.records:
            t, node, kind = rec[0], rec[1], rec[2]
            detail = " ".join(str(x) for x in rec[3:])
            lines.append(f"{t} {node} {kind} {detail}".rstrip())
        lines.append(
            f"# end={self.end} t={self.end_us} sends={self.sends}"
            f" drops={self.drops} dups={self.duplicates}"
            f" deliveries={self.deliveries}"
        )
        return "\n".join(lines) + "\n"

    def ownership_records(self):
        return [r for r in self.records if r[2] == "own"]


class _Node:
    __slots__ = (
        "node_id", "is_proposer", "is_acceptor", "up", "epoch", "host",
        "store", "rate", "timers", "rng",
    )

    def __init__(self, node_id, is_proposer, is_acceptor, rate, rng):
        self.node_id = node_id
        self.is_proposer = is_proposer
        self.is_acceptor = is_acceptor
        self.up = False
        self.epoch = 0
        self.host = None
        self.store = MemoryRestartStore()
        self.rate = rate
        self.timers: dict[tuple[str, str], tuple[int, int]] = {}
        self.rng = rng

    def local(self, t_us: int) -> int:
        return t_us if self.rate == 1.0 else int(t_us * self.rate)


class Simulator:
    def __init__(self, scenario: Scenario, plan: FaultPlan, full_trace: bool = False):
        self.scenario = scenario
        self.plan = plan
        self.full = full_trace
        self.sampler = FateSampler(plan)
        self.trace = Trace(scenario.name, plan.seed)
        self._heap: list = []
        self._seq = 0
        self._rules = [[rule, rule.count] for rule in scenario.rules]
        self.nodes: dict[int, _Node] = {}
        roles = {}
        for p in scenario.proposers:
            roles[p] = [True, False]
        for a in scenario.acceptors:
            roles.setdefault(a, [False, False])[1] = True
        for node_id, (is_p, is_a) in roles.items():
            rng = random.Random(plan.seed * 1_000_003 + node_id * 9176 + 11)
            self.nodes[node_id] = _Node(node_id, is_p, is_a, plan.drift(node_id), rng)
        self._mut_no_timeout = frozenset(
            scenario.mutations.get(MUT_NO_LEASE_TIMEOUT, ())
        )
        self._mut_early_expiry = frozenset(
            scenario.mutations.get(MUT_EARLY_EXPIRY, ())
        )

    # -- event queue --------------------------------------------------------

    def _push(self, t_us: int, kind: int, data) -> None:
        self._seq += 1
        heapq.heappush(self._heap, (t_us, self._seq, kind, data))

    # -- node lifecycle -------------------------------------------------------

    def _boot(self, node: _Node, now_us: int, gate: bool) -> None:
        node.up = True
        node.epoch += 1
        node.timers = {}
        counter = node.store.load_and_bump()
        if self.scenario.naive:
            node.host = NaiveHost(
                node.node_id,
                len(self.scenario.acceptors),
                node.is_proposer,
                node.is_acceptor,
            )
        else:
            cfg = ClusterConfig(
                node_id=node.node_id,
                acceptor_ids=self.scenario.acceptors,
                max_lease_ms=self.scenario.max_lease_ms,
                is_proposer=node.is_proposer,
                is_acceptor=node.is_acceptor,
                reply_rejects=self.scenario.reply_rejects,
            )
            node.host = LeaseTable(
                cfg,
                restart_counter=counter,
                rng=node.rng,
                boot_us=node.local(now_us),
                gate_acceptors=gate,
            )
        for mission in self.scenario.missions:
            if mission.node == node.node_id and node.is_proposer:
                self._dispatch(
                    node,
                    mission.resource,
                    AcquireCommand(mission.timespan_ms, hold=mission.hold),
                    now_us,
                )

    def _crash(self, node: _Node, now_us: int, downtime_us: int) -> None:
        if not node.up:
            return
        node.up = False
        node.host = None
        node.timers = {}
        if self.full:
            self.trace.records.append((now_us, node.node_id, "crash"))
        self._push(now_us + downtime_us, _RESTART, node.node_id)

    def _restart(self, node: _Node, now_us: int) -> None:
        if node.up:
            return
        if self.full:
            self.trace.records.append((now_us, node.node_id, "restart"))
        self._boot(node, now_us, gate=not self.scenario.rejoin_gate_zero)

    # -- dispatch and effects ---------------------------------------------------

    def _dispatch(self, node: _Node, resource: str, event, now_us: int) -> None:
        local = node.local(now_us)
        watch = self.full and not self.scenario.naive and node.is_acceptor
        if watch:
            inst = node.host.instance(resource)
            before_prop = inst.acceptor.accepted_proposal
            before_prom = inst.acceptor.highest_promised
        tagged = node.host.dispatch(resource, event, local)
        if watch:
            inst = node.host.instance(resource)
            after_prop = inst.acceptor.accepted_proposal
            after_prom = inst.acceptor.highest_promised
            recs = self.trace.records
            if after_prom is not None and after_prom != before_prom:
                recs.append((now_us, node.node_id, "promise", resource, str(after_prom)))
            if after_prop is not before_prop:
                if before_prop is not None:
                    recs.append((now_us, node.node_id, "clear", resource))
                if after_prop is not None:
                    recs.append(
                        (
                            now_us,
                            node.node_id,
                            "install",
                            resource,
                            str(after_prop.ballot),
                            after_prop.lease.timespan_ms,
                        )
                    )
        for res, effect in tagged:
            self._execute(node, res, effect, now_us)

    def _execute(self, node: _Node, resource: str, effect, now_us: int) -> None:
        if type(effect) is Broadcast:
            self.trace.broadcasts[node.node_id] = (
                self.trace.broadcasts.get(node.node_id, 0) + 1
            )
            if self.full:
                self.trace.records.append(
                    (
                        now_us,
                        node.node_id,
                        "bcast",
                        resource,
                        _KIND_TAGS[type(effect.message)],
                    )
                )
                if type(effect.message) is PrepareRequest:
                    self.trace.records.append(
                        (
                            now_us,
                            node.node_id,
                            "ballot",
                            resource,
                            str(effect.message.ballot),
                        )
                    )
            for acceptor_id in self.scenario.acceptors:
                self._send(node.node_id, acceptor_id, resource, effect.message, now_us)
        elif type(effect) is SendTo:
            self._send(node.node_id, effect.node_id, resource, effect.message, now_us)
        elif type(effect) is SetTimer:
            delay = effect.delay_us
            if effect.timer_id == EXPIRY_TIMER and node.node_id in self._mut_early_expiry:
                delay = min(delay, 1000)
            if node.rate != 1.0:
                delay = math.ceil(delay / node.rate)
            key = (resource, effect.timer_id)
            gen = node.timers.get(key, (0, 0))[1] + 1
            node.timers[key] = (node.epoch, gen)
            self._push(
                now_us + delay,
                _TIMER,
                (node.node_id, resource, effect.timer_id, node.epoch, gen),
            )
        elif type(effect) is CancelTimer:
            key = (resource, effect.timer_id)
            if key in node.timers:
                epoch, gen = node.timers[key]
                node.timers[key] = (epoch, gen + 1)  # orphan pending event
        elif type(effect) is StatusChange:
            deadline = self._owner_deadline(node, resource) if effect.lease_owner else -1
            self.trace.records.append(
                (
                    now_us,
                    node.node_id,
                    "own",
                    resource,
                    int(effect.lease_owner),
                    deadline,
                )
            )
            if effect.lease_owner:
                # Advisory learn-style hint; never consumed by the protocol.
                self.trace.records.append((now_us, node.node_id, "hint", resource))
        else:
            raise TypeError(f"unknown effect {effect!r}")

    def _owner_deadline(self, node: _Node, resource: str) -> int:
        inst = node.host.instance(resource)
        if self.scenario.naive:
            return inst.lease_deadline_us if inst.lease_deadline_us else -1
        if inst.proposer is not None and inst.proposer.lease_deadline_us is not None:
            return inst.proposer.lease_deadline_us
        return -1

    # -- transit -----------------------------------------------------------------

    def _send(self, src: int, dst: int, resource: str, message, now_us: int) -> None:
        self.trace.sends += 1
        kind = _KIND_TAGS[type(message)]
        if self.full:
            self.trace.records.append((now_us, src, "send", resource, kind, dst))
        for entry in self._rules:
            rule, remaining = entry
            if remaining == 0 or not rule.matches(src, dst, kind):
                continue
            if remaining is not None:
                entry[1] = remaining - 1
            if rule.drop:
                self._drop(now_us, src, dst, resource, kind, "rule")
                return
            if rule.deliver_at_us is not None:
                at = max(rule.deliver_at_us, now_us)
            else:
                at = now_us + (rule.delay_us or 0)
            self._push(at, _DELIVER, (dst, src, resource, message))
            return
        delays = self.sampler.message_fates(now_us, src, dst)
        if not delays:
            self._drop(now_us, src, dst, resource, kind, "fault")
            return
        if len(delays) > 1:
            self.trace.duplicates += 1
        for delay in delays:
            self._push(now_us + delay, _DELIVER, (dst, src, resource, message))

    def _drop(self, now_us, src, dst, resource, kind, reason) -> None:
        self.trace.drops += 1
        if self.full:
            self.trace.records.append(
                (now_us, src, "dropped", resource, kind, dst, reason)
            )

    # -- main loop -----------------------------------------------------------------

    def run(self) -> Trace:
        sc = self.scenario
        for node in self.nodes.values():
            self._boot(node, 0, gate=sc.gate_initial)
        for cmd in sc.commands:
            self._push(cmd.at_us, _COMMAND, cmd)
        for crash in self.plan.crashes:
            self._push(crash.at_us, _CRASH, (crash.node, crash.downtime_us))

        heap = self._heap
        limit = sc.limit_us
        end_us = 0
        while heap:
            t_us, _, kind, data = heapq.heappop(heap)
            if t_us > limit:
                self.trace.end = "limit"
                end_us = limit
                break
            end_us = t_us
            if kind == _DELIVER:
                dst, src, resource, message = data
                node = self.nodes[dst]
                if not node.up:
                    self._drop(t_us, src, dst, resource, _KIND_TAGS[type(message)], "down")
                    continue
                self.trace.deliveries += 1
                if self.full:
                    self.trace.records.append(
                        (t_us, dst, "recv", resource, _KIND_TAGS[type(message)], src)
                    )
                self._dispatch(node, resource, Deliver(message, src), t_us)
            elif kind == _TIMER:
                node_id, resource, timer_id, epoch, gen = data
                node = self.nodes[node_id]
                if not node.up or node.timers.get((resource, timer_id)) != (epoch, gen):
                    continue  # stale: superseded, cancelled, or lost to a crash
                if timer_id == LEASE_TIMER and node_id in self._mut_no_timeout:
                    continue  # mutation: claim never expires locally
                if self.full:
                    self.trace.records.append(
                        (t_us, node_id, "timer", resource, timer_id)
                    )
                if timer_id == EXPIRY_TIMER and node_id in self._mut_early_expiry:
                    self._force_expire(node, resource, t_us)
                    continue
                self._dispatch(node, resource, TimerFired(timer_id), t_us)
            elif kind == _COMMAND:
                self._command(data)
            elif kind == _CRASH:
                node_id, downtime_us = data
                self._crash(self.nodes[node_id], t_us, downtime_us)
            elif kind == _RESTART:
                self._restart(self.nodes[data], t_us)
        self.trace.end_us = end_us
        return self.trace

    def _force_expire(self, node: _Node, resource: str, now_us: int) -> None:
        # Mutation harness: clears acceptor state regardless of the stored
        # deadline, breaking the expiry discipline on purpose.
        inst = node.host.instance(resource)
        if inst.acceptor is not None:
            inst.acceptor.accepted_proposal = None
            inst.acceptor.expiry_deadline_us = None
            if self.full:
                self.trace.records.append((now_us, node.node_id, "clear", resource))

    def _command(self, cmd: Command) -> None:
        node = self.nodes[cmd.node]
        if cmd.verb == "crash":
            self._crash(node, cmd.at_us, cmd.downtime_us)
            return
        if cmd.verb == "restart":
            self._restart(node, cmd.at_us)
            return
        if not node.up:
            return
        if self.full:
            self.trace.records.append(
                (cmd.at_us, cmd.node, "cmd", cmd.verb, cmd.resource)
            )
        if cmd.verb == "acquire":
            self._dispatch(
                node,
                cmd.resource,
                AcquireCommand(cmd.timespan_ms, hold=cmd.hold),
                cmd.at_us,
            )
        elif cmd.verb == "release":
            self._dispatch(node, cmd.resource, ReleaseCommand(), cmd.at_us)
        else:
            raise ValueError(f"unknown command verb {cmd.verb!r}")


def run_scenario(
    scenario: Scenario, plan: FaultPlan, full_trace: bool = False
) -> Trace:
    """Run one seeded simulation to quiescence or the virtual time limit."""
    return Simulator(scenario, plan, full_trace=full_trace).run()
