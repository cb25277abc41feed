"""Declarative simulation scenarios: nodes, timed commands, fault plans.

A scenario is plain data so the adversarial schedules used by the proof
checks live in version control as fixtures, not as imperative test code.
Scenarios come from three places: the built-in catalog (`builtin`), a
scenario file (`parse_scenario`, grammar below), or test code building
`Scenario` directly.

Scenario file grammar (one statement per line, `#` starts a comment):

    name = duel                      # identifier
    proposers = 1 2                  # node ids
    acceptors = 101 102 103
    max-lease = 5000ms               # M
    limit = 60000ms                  # virtual run limit
    seed = 7
    drop = 0.3                       # message drop probability
    dup = 0.05                       # duplication probability
    delay = 0ms..4000ms              # uniform transit delay
    reply-rejects = yes|no           # acceptor reject vs silence
    gate-initial = yes|no            # arm rejoin gate at genesis
    rejoin-gate = M|zero             # gate after restarts
    at 0ms 1 acquire r1 T=2000ms hold
    at 4000ms 1 release r1
    at 2000ms crash 101 down=500ms
    mission 2 r1 T=2000ms hold       # standing mission, reapplied on boot
    partition 2000ms..4000ms | 1 101 # side of the cut, rest is the other
    rule src=1 dst=101 kind=POQ count=1 delay=4000ms
    rule src=2 kind=PRQ drop
    drift 101 1.02                   # clock rate multiplier
    mutate no-lease-timeout 1        # harness mutations (see proofs)
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .faults import CrashEvent, DeliveryRule, FaultPlan, Partition

MS = 1000


@dataclass(frozen=True, slots=True)
class Command:
    at_us: int
    verb: str  # acquire | release | crash | restart
    node: int
    resource: str = ""
    timespan_ms: int = 0
    hold: bool = False
    downtime_us: int = 0


@dataclass(frozen=True, slots=True)
class Mission:
    node: int
    resource: str
    timespan_ms: int
    hold: bool = True


@dataclass
class Scenario:
    name: str
    proposers: tuple[int, ...]
    acceptors: tuple[int, ...]
    max_lease_ms: int = 5000
    limit_us: int = 60_000 * MS
    commands: tuple[Command, ...] = ()
    missions: tuple[Mission, ...] = ()
    rules: tuple[DeliveryRule, ...] = ()
    reply_rejects: bool = True
    gate_initial: bool = False
    rejoin_gate_zero: bool = False
    naive: bool = False
    # Deliberate protocol breakage for oracle-teeth checks:
    #   no-lease-timeout: listed proposers never give up ownership
    #   early-expiry: listed acceptors clear stored proposals almost
    #     immediately instead of after the lease timespan
    mutations: dict[str, tuple[int, ...]] = field(default_factory=dict)

    def with_mutation(self, name: str, nodes: tuple[int, ...]) -> "Scenario":
        muts = dict(self.mutations)
        muts[name] = nodes
        return replace(self, mutations=muts, name=f"{self.name}+{name}")


class ScenarioError(ValueError):
    pass


# -- built-in catalog ---------------------------------------------------------


def fastpath() -> tuple[Scenario, FaultPlan]:
    """One proposer, three acceptors, no faults: the two round-trip path."""
    sc = Scenario(
        name="fastpath",
        proposers=(1,),
        acceptors=(101, 102, 103),
        limit_us=10_000 * MS,
        commands=(Command(0, "acquire", 1, "r", 2000),),
    )
    return sc, FaultPlan(delay_min_us=1 * MS, delay_max_us=1 * MS)


def extend_hold(periods: int = 12) -> tuple[Scenario, FaultPlan]:
    """A holder extending every T/2; ownership must be gapless."""
    sc = Scenario(
        name="extend-hold",
        proposers=(1,),
        acceptors=(101, 102, 103),
        limit_us=(periods + 4) * 2000 * MS,
        commands=(Command(0, "acquire", 1, "r", 2000, hold=True),),
    )
    return sc, FaultPlan(delay_min_us=1 * MS, delay_max_us=1 * MS)


def release_handoff() -> tuple[Scenario, FaultPlan]:
    """Owner releases early; a competitor must get in before the old
    expiry deadline."""
    sc = Scenario(
        name="release-handoff",
        proposers=(1, 2),
        acceptors=(101, 102, 103),
        limit_us=20_000 * MS,
        commands=(
            Command(0, "acquire", 1, "r", 4000),
            Command(500 * MS, "acquire", 2, "r", 2000, hold=False),
            Command(1000 * MS, "release", 1, "r"),
        ),
    )
    return sc, FaultPlan(delay_min_us=1 * MS, delay_max_us=1 * MS)


def duel(adversarial: bool = True) -> tuple[Scenario, FaultPlan]:
    """Two synchronized contenders.  With adversarial propose delays each
    round's propose wave lands after the rival's next prepare wave, which
    sustains the ballot race until randomized backoff desynchronizes it."""
    rules = ()
    if adversarial:
        rules = (
            DeliveryRule(kind="POQ", delay_us=30 * MS),
            DeliveryRule(kind="PRQ", delay_us=1 * MS),
            DeliveryRule(kind="PRS", delay_us=1 * MS),
            DeliveryRule(kind="POS", delay_us=1 * MS),
        )
    sc = Scenario(
        name="duel",
        proposers=(1, 2),
        acceptors=(101, 102, 103),
        limit_us=120_000 * MS,
        commands=(
            Command(0, "acquire", 1, "r", 2000),
            Command(1 * MS, "acquire", 2, "r", 2000),
        ),
        rules=rules,
    )
    return sc, FaultPlan(delay_min_us=1 * MS, delay_max_us=1 * MS)


# Delay matrix that splits the naive baseline three ways: acceptor 10i
# hears proposer i first.  Same matrix drives the PaxosLease comparison.
_CONTENTION_DELAYS = {
    (1, 101): 1, (2, 101): 2, (3, 101): 3,
    (2, 102): 1, (1, 102): 2, (3, 102): 3,
    (3, 103): 1, (1, 103): 2, (2, 103): 3,
}


def _contention_rules() -> tuple[DeliveryRule, ...]:
    rules = []
    for (src, dst), ms in _CONTENTION_DELAYS.items():
        rules.append(DeliveryRule(src=src, dst=dst, delay_us=ms * MS))
        rules.append(DeliveryRule(src=dst, dst=src, delay_us=ms * MS))
    return tuple(rules)


def naive_contention() -> tuple[Scenario, FaultPlan]:
    """The three-way split where every acceptor granted a different
    proposer and nobody reaches a majority."""
    sc = Scenario(
        name="naive-contention",
        proposers=(1, 2, 3),
        acceptors=(101, 102, 103),
        naive=True,
        limit_us=30_000 * MS,
        commands=tuple(Command(0, "acquire", p, "r", 2000) for p in (1, 2, 3)),
        rules=_contention_rules(),
    )
    return sc, FaultPlan(delay_min_us=1 * MS, delay_max_us=1 * MS)


def paxos_contention() -> tuple[Scenario, FaultPlan]:
    """PaxosLease under the exact schedule that deadlocks the naive
    algorithm."""
    sc, plan = naive_contention()
    return replace(sc, name="paxos-contention", naive=False), plan


def crash_churn(
    rejoin_gate_zero: bool = False,
    num_proposers: int = 3,
    num_acceptors: int = 5,
) -> tuple[Scenario, FaultPlan]:
    """Contending holders with acceptors crashing and rejoining.  The
    crash schedule is seeded per run by the batch layer."""
    proposers = tuple(range(1, num_proposers + 1))
    acceptors = tuple(range(101, 101 + num_acceptors))
    sc = Scenario(
        name="crash-churn" + ("-gate0" if rejoin_gate_zero else ""),
        proposers=proposers,
        acceptors=acceptors,
        limit_us=30_000 * MS,
        missions=tuple(Mission(p, "r", 2000) for p in proposers),
        rejoin_gate_zero=rejoin_gate_zero,
    )
    return sc, FaultPlan(delay_min_us=0, delay_max_us=4000 * MS)


BUILTINS = {
    "fastpath": fastpath,
    "extend-hold": extend_hold,
    "release-handoff": release_handoff,
    "duel": duel,
    "naive-contention": naive_contention,
    "paxos-contention": paxos_contention,
    "crash-churn": crash_churn,
}


def builtin(name: str) -> tuple[Scenario, FaultPlan]:
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise ScenarioError(f"unknown builtin scenario {name!r}")
    return factory()


# -- scenario file parser -----------------------------------------------------


def _duration_us(token: str) -> int:
    if not token.endswith("ms"):
        raise ScenarioError(f"durations take a ms suffix, got {token!r}")
    return int(token[:-2]) * MS


def _span(token: str) -> tuple[int, int]:
    lo, _, hi = token.partition("..")
    return _duration_us(lo), _duration_us(hi)


def _yesno(token: str) -> bool:
    if token in ("yes", "true", "on"):
        return True
    if token in ("no", "false", "off"):
        return False
    raise ScenarioError(f"expected yes/no, got {token!r}")


def parse_scenario(text: str) -> tuple[Scenario, FaultPlan]:
    name = "scenario"
    proposers: tuple[int, ...] = ()
    acceptors: tuple[int, ...] = ()
    kw: dict = {}
    commands: list[Command] = []
    missions: list[Mission] = []
    rules: list[DeliveryRule] = []
    partitions: list[Partition] = []
    crashes: list[CrashEvent] = []
    drift: dict[int, float] = {}
    mutations: dict[str, tuple[int, ...]] = {}
    plan_kw: dict = {}

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            tokens = line.split()
            if len(tokens) > 1 and tokens[1] == "=":
                key, values = tokens[0], tokens[2:]
                if key == "name":
                    name = values[0]
                elif key == "proposers":
                    proposers = tuple(int(v) for v in values)
                elif key == "acceptors":
                    acceptors = tuple(int(v) for v in values)
                elif key == "max-lease":
                    kw["max_lease_ms"] = _duration_us(values[0]) // MS
                elif key == "limit":
                    kw["limit_us"] = _duration_us(values[0])
                elif key == "seed":
                    plan_kw["seed"] = int(values[0])
                elif key == "drop":
                    plan_kw["drop_probability"] = float(values[0])
                elif key == "dup":
                    plan_kw["duplicate_probability"] = float(values[0])
                elif key == "delay":
                    lo, hi = _span(values[0])
                    plan_kw["delay_min_us"], plan_kw["delay_max_us"] = lo, hi
                elif key == "reply-rejects":
                    kw["reply_rejects"] = _yesno(values[0])
                elif key == "gate-initial":
                    kw["gate_initial"] = _yesno(values[0])
                elif key == "rejoin-gate":
                    kw["rejoin_gate_zero"] = values[0] == "zero"
                elif key == "naive":
                    kw["naive"] = _yesno(values[0])
                else:
                    raise ScenarioError(f"unknown key {key!r}")
            elif tokens[0] == "at":
                commands.append(_parse_command(tokens[1:]))
            elif tokens[0] == "mission":
                node = int(tokens[1])
                resource = tokens[2]
                t_ms = _duration_us(tokens[3].removeprefix("T=")) // MS
                missions.append(Mission(node, resource, t_ms, hold=True))
            elif tokens[0] == "rule":
                rules.append(_parse_rule(tokens[1:]))
            elif tokens[0] == "partition":
                span, _, side = line.partition("|")
                lo, hi = _span(span.split()[1])
                members = frozenset(int(v) for v in side.split())
                partitions.append(Partition(lo, hi, members))
            elif tokens[0] == "crash":
                node = int(tokens[1])
                at = _duration_us(tokens[2].removeprefix("at="))
                down = _duration_us(tokens[3].removeprefix("down="))
                crashes.append(CrashEvent(at, node, down))
            elif tokens[0] == "drift":
                drift[int(tokens[1])] = float(tokens[2])
            elif tokens[0] == "mutate":
                mutations[tokens[1]] = tuple(int(v) for v in tokens[2:])
            else:
                raise ScenarioError(f"unknown statement {tokens[0]!r}")
        except (IndexError, ValueError) as exc:
            raise ScenarioError(f"line {lineno}: {exc}") from exc

    if not acceptors:
        raise ScenarioError("scenario declares no acceptors")
    scenario = Scenario(
        name=name,
        proposers=proposers,
        acceptors=acceptors,
        commands=tuple(commands),
        missions=tuple(missions),
        rules=tuple(rules),
        mutations=mutations,
        **kw,
    )
    plan = FaultPlan(
        partitions=tuple(partitions),
        crashes=tuple(crashes),
        clock_drift=drift,
        **plan_kw,
    )
    return scenario, plan


def _parse_command(tokens: list[str]) -> Command:
    at = _duration_us(tokens[0])
    if tokens[1] == "crash":
        node = int(tokens[2])
        down = _duration_us(tokens[3].removeprefix("down="))
        return Command(at, "crash", node, downtime_us=down)
    if tokens[1] == "restart":
        return Command(at, "restart", int(tokens[2]))
    node = int(tokens[1])
    verb = tokens[2]
    if verb == "acquire":
        resource = tokens[3]
        t_ms = _duration_us(tokens[4].removeprefix("T=")) // MS
        hold = len(tokens) > 5 and tokens[5] == "hold"
        return Command(at, "acquire", node, resource, t_ms, hold)
    if verb == "release":
        return Command(at, "release", node, tokens[3])
    raise ScenarioError(f"unknown verb {verb!r}")


def _parse_rule(tokens: list[str]) -> DeliveryRule:
    kw: dict = {}
    for tok in tokens:
        if tok == "drop":
            kw["drop"] = True
            continue
        key, _, value = tok.partition("=")
        if key in ("src", "dst"):
            kw[key] = int(value)
        elif key == "kind":
            kw["kind"] = value
        elif key == "count":
            kw["count"] = int(value)
        elif key == "delay":
            kw["delay_us"] = _duration_us(value)
        elif key == "deliver-at":
            kw["deliver_at_us"] = _duration_us(value)
        else:
            raise ScenarioError(f"unknown rule field {key!r}")
    return DeliveryRule(**kw)
