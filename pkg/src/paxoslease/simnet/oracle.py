"""Machine-checked verdicts over simulation traces.

The safety oracle reconstructs ownership intervals per resource from the
StatusChange records and reports every instant where two proposers
believed themselves owner at once.  Intervals are half-open, so a release
at t followed by an acquisition at t is not an overlap.

The invariant checks consume the full-trace record kinds (promise,
install, clear, own) and are meant for zero-drift runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..messages import BallotNumber
from .engine import Trace


@dataclass(frozen=True, slots=True)
class Overlap:
    resource: str
    start_us: int
    end_us: int
    nodes: tuple[int, ...]


@dataclass
class Verdict:
    overlaps: list[Overlap] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.overlaps

    def describe(self) -> str:
        if self.ok:
            return "safety: ok"
        lines = ["safety: VIOLATION"]
        for o in self.overlaps:
            lines.append(
                f"  resource={o.resource} overlap [{o.start_us},{o.end_us})"
                f" nodes={','.join(map(str, o.nodes))}"
            )
        return "\n".join(lines)


def ownership_intervals(trace: Trace) -> dict[str, list[tuple[int, int, int]]]:
    """Per resource: list of (start_us, end_us, node); an interval still
    open when the trace ends closes at the trace end time."""
    open_since: dict[tuple[str, int], int] = {}
    intervals: dict[str, list[tuple[int, int, int]]] = {}
    for rec in trace.records:
        if rec[2] != "own":
            continue
        t, node, _, resource, owned = rec[0], rec[1], rec[2], rec[3], rec[4]
        key = (resource, node)
        if owned:
            open_since[key] = t
        elif key in open_since:
            start = open_since.pop(key)
            intervals.setdefault(resource, []).append((start, t, node))
    for (resource, node), start in open_since.items():
        intervals.setdefault(resource, []).append((start, trace.end_us, node))
    for spans in intervals.values():
        spans.sort()
    return intervals


def check_safety(trace: Trace) -> Verdict:
    verdict = Verdict()
    for resource, spans in ownership_intervals(trace).items():
        for i, (start, end, node) in enumerate(spans):
            for start2, end2, node2 in spans[i + 1 :]:
                if start2 >= end:
                    break  # sorted by start; nothing later can overlap
                if node2 != node:
                    verdict.overlaps.append(
                        Overlap(
                            resource,
                            start2,
                            min(end, end2),
                            tuple(sorted({node, node2})),
                        )
                    )
    return verdict


def check_alternation(trace: Trace) -> list[str]:
    """StatusChange must alternate true/false per (node, resource)."""
    errors = []
    last: dict[tuple[int, str], int] = {}
    for rec in trace.records:
        if rec[2] != "own":
            continue
        t, node, _, resource, owned = rec[:5]
        key = (node, resource)
        if last.get(key, 0) == owned:
            errors.append(f"non-alternating StatusChange at t={t} node={node}")
        last[key] = owned
    return errors


def check_promise_monotonic(trace: Trace) -> list[str]:
    """Within one acceptor run the promise watermark never decreases.
    Requires a full trace; restarts reset the watermark legitimately."""
    errors = []
    current: dict[tuple[int, str], BallotNumber] = {}
    for rec in trace.records:
        kind = rec[2]
        if kind == "restart":
            node = rec[1]
            current = {k: v for k, v in current.items() if k[0] != node}
        elif kind == "promise":
            t, node, _, resource, ballot_str = rec
            ballot = _parse_ballot(ballot_str)
            key = (node, resource)
            prev = current.get(key)
            if prev is not None and ballot < prev:
                errors.append(
                    f"promise regressed at t={t} node={node}: {prev} -> {ballot}"
                )
            current[key] = ballot
    return errors


def check_proposal_lifetime(trace: Trace) -> list[str]:
    """A stored proposal lives at most its lease timespan (zero drift)."""
    errors = []
    installed: dict[tuple[int, str], tuple[int, int]] = {}
    for rec in trace.records:
        kind = rec[2]
        if kind == "install":
            t, node, _, resource, _ballot, timespan_ms = rec
            installed[(node, resource)] = (t, timespan_ms)
        elif kind == "clear":
            t, node, _, resource = rec
            entry = installed.pop((node, resource), None)
            if entry is not None:
                start, timespan_ms = entry
                if t - start > timespan_ms * 1000:
                    errors.append(
                        f"proposal outlived its timespan at node={node}"
                        f" t={t} start={start} T={timespan_ms}ms"
                    )
        elif kind == "crash":
            node = rec[1]
            installed = {k: v for k, v in installed.items() if k[0] != node}
    return errors


def check_ballot_monotonic_per_proposer(trace: Trace) -> list[str]:
    """Running-max oracle over every ballot a proposer ever used, across
    restarts (full trace: prepare broadcasts carry the ballot)."""
    errors = []
    running_max: dict[int, BallotNumber] = {}
    for rec in trace.records:
        if rec[2] != "ballot":
            continue
        t, node, _, _resource, ballot_str = rec
        ballot = _parse_ballot(ballot_str)
        prev = running_max.get(node)
        if prev is not None and ballot <= prev:
            errors.append(f"ballot not increasing at t={t} node={node}: {prev} -> {ballot}")
        running_max[node] = ballot
    return errors


def _parse_ballot(text: str) -> BallotNumber:
    restart, run, pid = text.split(".")
    return BallotNumber(int(restart), int(run), int(pid))
