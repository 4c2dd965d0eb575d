"""Grid automata: member machines, a shared space, time scales, an exchange
schedule and an optional controller, run on a global tick loop.

Per tick: the global controller (if any) moves first and may publish a new
directive; every member whose scale puts a move on this tick and which is
admitted by the schedule (and the directive) makes one move, all of them
reading the space as it was before the tick; the collected writes are then
committed in mover order, conflicts going to the arbiter.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, NamedTuple

from gridsim.machine import (
    Compiled,
    MachineConfig,
    MachineSpec,
    HALTED,
    STUCK,
    Outcome,
    compile_spec,
    initial_config,
    advance,
    run,
    check,
)
from gridsim.scheduling import (
    ExchangeSchedule,
    TimeScaleMap,
    admits,
    always,
    identity,
    is_rational,
    ticks_upto,
)
from gridsim.space import PLACEHOLDER, CommSpace, Conflict, ConflictError, WriteEvent

REGIMES = ("free", "partially_free", "implicitly_procedural", "explicitly_procedural")
ORACLE_ROLES = ("initial-information", "partner-output", "exchange-schedule", "cell-choice")


@dataclass(frozen=True)
class Member:
    id: str
    spec: MachineSpec
    scale: TimeScaleMap = field(default_factory=identity)
    rules: frozenset[str] = frozenset()  # declared local interaction rule ids
    oracle: str | None = None  # oracle role feeding this member, if any


@dataclass(frozen=True)
class Directive:
    """Access granted by a global controller until its next directive.

    ``cells`` is an inclusive ``(lo, hi)`` window, ``None`` for the whole space.
    """

    members: frozenset[str]
    read: bool = True
    write: bool = True
    cells: tuple[int, int] | None = None

    def covers(self, cell: int) -> bool:
        return self.cells is None or self.cells[0] <= cell <= self.cells[1]


@dataclass(frozen=True)
class Controller:
    """Machine C.

    In ``global`` mode ``spec`` is the director: it moves once per tick and
    each symbol it emits on ``out1`` selects a :class:`Directive`. Conflicts
    go to ``arbiter``. In ``local`` mode ``spec`` itself is the arbiter.

    An arbiter is run on the two contending symbols (earlier writer first)
    as its input word; the first symbol it emits on ``out1`` wins.
    """

    id: str
    spec: MachineSpec
    mode: str = "global"
    directives: Mapping[str, Directive] = field(default_factory=dict)
    arbiter: MachineSpec | None = None
    budget: int = 256

    @property
    def arbiter_spec(self) -> MachineSpec | None:
        return self.spec if self.mode == "local" else self.arbiter


@dataclass(frozen=True)
class GridConfig:
    members: tuple[Member, ...]
    schedule: ExchangeSchedule = field(default_factory=always)
    controller: Controller | None = None
    policy: str | None = None
    initial_space: str = ""
    inputs: Mapping[str, str] = field(default_factory=dict)
    horizon: int | None = None
    construction: str | None = None

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(m.id for m in self.members)

    @property
    def scales(self) -> dict[str, TimeScaleMap]:
        return {m.id: m.scale for m in self.members}

    @property
    def interaction_rules(self) -> dict[str, frozenset[str]]:
        return {m.id: m.rules for m in self.members}

    @property
    def effective_policy(self) -> str:
        if self.policy is not None:
            return self.policy
        return "controller-arbitrated" if self.controller is not None else "reject"

    @property
    def blank(self) -> str:
        return self.members[0].spec.blank if self.members else "_"

    def member(self, mid: str) -> Member:
        for m in self.members:
            if m.id == mid:
                return m
        raise KeyError(mid)


class GridValidationError(ValueError):
    def __init__(self, problems):
        self.problems = problems
        super().__init__("; ".join(problems))


def validate_grid(config: GridConfig, strict: bool = False) -> list[str]:
    """Problems with ``config``.

    With ``strict`` the global-control synchronisation premise (all member
    scales rational w.r.t. the controller) is also checked. The engine runs
    grids that violate it; flattening reports it instead.
    """
    problems = []
    ids = config.ids
    if not ids:
        problems.append("grid has no members")
    if len(set(ids)) != len(ids):
        problems.append("member ids are not unique")
    for mid in ids:
        if not mid or any(c.isspace() for c in mid):
            problems.append(f"bad member id {mid!r}")
    blanks = {m.spec.blank for m in config.members}
    if len(blanks) > 1:
        problems.append("members disagree on the blank symbol")
    for m in config.members:
        for v in check(m.spec):
            problems.append(f"{m.id}: {v.detail}")
        if m.oracle is not None and m.oracle not in ORACLE_ROLES:
            problems.append(f"{m.id}: unknown oracle role {m.oracle!r}")
    for mid in config.inputs:
        if mid not in ids:
            problems.append(f"input for unknown member {mid!r}")
    if config.policy is not None and config.policy not in ("reject", "priority-order", "controller-arbitrated"):
        problems.append(f"unknown conflict policy {config.policy!r}")
    c = config.controller
    if c is not None:
        if c.id in ids:
            problems.append("controller id collides with a member id")
        if c.mode not in ("global", "local"):
            problems.append(f"unknown control mode {c.mode!r}")
        for v in check(c.spec):
            problems.append(f"{c.id}: {v.detail}")
        if c.arbiter is not None:
            for v in check(c.arbiter):
                problems.append(f"{c.id} arbiter: {v.detail}")
        if c.mode == "global":
            if c.spec.outputs < 1:
                problems.append(f"{c.id}: director needs an output tape")
            for r in c.spec.rules:
                if r.write_comm is not None:
                    problems.append(f"{c.id}: director may not write the space")
                if r.emit is not None and r.emit[1] == 1 and r.emit[0] not in c.directives:
                    problems.append(f"{c.id}: emitted symbol {r.emit[0]!r} names no directive")
            for d in c.directives.values():
                if not d.members <= set(ids):
                    problems.append(f"{c.id}: directive names unknown members")
            if strict:
                for m in config.members:
                    if not is_rational(m.scale):
                        problems.append(f"{m.id}: global control needs a scale rational w.r.t. {c.id}")
    return problems


def classify(config: GridConfig) -> str:
    c = config.controller
    if c is not None and c.mode == "global":
        return "explicitly_procedural"
    ruled = [bool(m.rules) for m in config.members]
    if all(ruled):
        return "implicitly_procedural"
    if not any(ruled):
        return "free"
    return "partially_free"


# ---------------------------------------------------------------------------
# traces


class ReplayDivergence(RuntimeError):
    pass


@dataclass
class Trace:
    """Flat event list; every event is a tuple starting with its tick.

    Kinds: ``directive`` (id, symbol), ``move`` (id, outcome), ``emit`` (id,
    tape, symbol), ``write`` (writer, cell, symbol), ``deny`` (id, cell,
    symbol), ``conflict`` (cell, writer1, sym1, writer2, sym2, winner, how).
    Outcomes: ``step``, ``halted``, ``stuck``, ``wait`` (not admitted by the
    schedule), ``held`` (not permitted by the directive).
    """

    events: list[tuple] = field(default_factory=list)
    status: dict[str, tuple[str, str, int]] = field(default_factory=dict)
    final: str | None = None

    def writes(self) -> list[WriteEvent]:
        return [WriteEvent(e[0], e[2], e[3], e[4]) for e in self.events if e[1] == "write"]

    def history(self, horizon: int) -> list[str]:
        """Space snapshot after each tick ``0..horizon``.

        A run is causal, so entry ``h`` is also the final space of the same
        config run to horizon ``h``.
        """
        cells: dict[int, str] = {}
        buf: list[str] = []
        out = []
        writes = iter(e for e in self.events if e[1] == "write")
        pending = next(writes, None)
        for t in range(horizon + 1):
            while pending is not None and pending[0] <= t:
                cell = pending[3]
                if cell >= len(buf):
                    buf.extend(PLACEHOLDER * (cell + 1 - len(buf)))
                buf[cell] = pending[4]
                pending = next(writes, None)
            out.append("".join(buf))
        return out

    def conflicts(self) -> list[tuple]:
        return [e for e in self.events if e[1] == "conflict"]

    def ticks(self) -> dict[int, list[tuple]]:
        out: dict[int, list[tuple]] = {}
        for e in self.events:
            out.setdefault(e[0], []).append(e)
        return out

    def text(self) -> str:
        lines = ["# gridsim trace 1"]
        lines += [" ".join(map(str, e)) for e in self.events]
        for mid, (outcome, state, clock) in self.status.items():
            lines.append(f"end status {mid} {outcome} {state} {clock}")
        if self.final is not None:
            lines.append(f"end space {self.final or '-'}")
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str) -> Trace:
        trace = cls()
        for line in text.splitlines():
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if parts[0] == "end":
                if parts[1] == "status":
                    trace.status[parts[2]] = (parts[3], parts[4], int(parts[5]))
                elif parts[1] == "space":
                    trace.final = "" if parts[2] == "-" else parts[2]
                continue
            tick, kind = int(parts[0]), parts[1]
            rest = parts[2:]
            if kind == "write":
                rest = [rest[0], int(rest[1]), rest[2]]
            elif kind == "emit":
                rest = [rest[0], int(rest[1]), rest[2]]
            elif kind == "deny":
                rest = [rest[0], int(rest[1]), rest[2]]
            elif kind == "conflict":
                rest = [int(rest[0])] + rest[1:]
            trace.events.append((tick, kind, *rest))
        return trace


def replay(trace: Trace, policy: str = "priority-order", blank: str = "_") -> CommSpace:
    """Rebuild the final space from the trace's write events alone."""
    space = CommSpace(policy="priority-order", blank=blank)
    for ev in trace.writes():
        space._commit(ev)
    if trace.final is not None:
        width = len(trace.final)
        if space.snapshot(width - 1) != trace.final or max(space.cells, default=-1) >= width:
            raise ReplayDivergence(
                f"replayed space {space.snapshot()!r} != recorded {trace.final!r}")
    space.policy = policy
    return space


def diff_traces(a: str, b: str) -> tuple[int, str, str] | None:
    """First differing line (1-based) of two trace texts, or ``None``."""
    la, lb = a.splitlines(), b.splitlines()
    for n, (x, y) in enumerate(zip(la, lb), 1):
        if x != y:
            return n, x, y
    if len(la) != len(lb):
        n = min(len(la), len(lb)) + 1
        return n, la[n - 1] if n <= len(la) else "<eof>", lb[n - 1] if n <= len(lb) else "<eof>"
    return None


# ---------------------------------------------------------------------------
# the run loop


class GridRun(NamedTuple):
    trace: Trace
    outputs: dict[str, tuple[str, ...]]
    space: CommSpace
    configs: dict[str, MachineConfig]

    def snapshot(self, upto: int | None = None) -> str:
        return self.space.snapshot(upto)


class UnresolvedConflict(RuntimeError):
    def __init__(self, conflict: Conflict, partial: GridRun | None = None, reason: str = ""):
        self.conflict = conflict
        self.partial = partial
        a, b = conflict
        super().__init__(
            f"tick {b.tick} cell {b.cell}: {a.writer} wrote {a.symbol!r}, "
            f"{b.writer} wrote {b.symbol!r}" + (f" ({reason})" if reason else ""))


def arbitrate(arbiter: MachineSpec, conflict: Conflict, budget: int) -> str | None:
    """Winning symbol chosen by ``arbiter``, or ``None`` if it gives no valid answer."""
    word = conflict.first.symbol + conflict.second.symbol
    if set(word) - set(arbiter.alphabet):
        return None
    out = run(arbiter, word, budget).outputs
    if not out or not out[0] or out[0][0] not in word:
        return None
    return out[0][0]


class _OpenView:
    """A member's window on the space during a tick: reads see the pre-tick
    cells, writes are queued for the commit phase."""

    __slots__ = ("cells", "blank", "pending", "writer")
    gated = False

    def __init__(self, cells, blank, pending, writer):
        self.cells = cells
        self.blank = blank
        self.pending = pending
        self.writer = writer

    def read(self, cell):
        return self.cells.get(cell, self.blank)

    def write(self, cell, symbol):
        self.pending.append((self.writer, cell, symbol))


class _SpaceView:
    """:class:`_OpenView` gated by the current directive."""

    __slots__ = ("cells", "blank", "pending", "writer", "directive")
    gated = True

    def __init__(self, cells, blank, pending, writer):
        self.cells = cells
        self.blank = blank
        self.pending = pending
        self.writer = writer
        self.directive = None

    def read(self, cell):
        d = self.directive
        if d is not None and not (d.read and d.covers(cell)):
            return self.blank
        return self.cells.get(cell, self.blank)

    def write(self, cell, symbol):
        self.pending.append((self.writer, cell, symbol))


def _status(machine: Compiled, cfg: MachineConfig, last: Outcome) -> str:
    if cfg.state in machine.final:
        return "halted"
    if last is Outcome.STUCK:
        return "stuck"
    return "running"


def run_grid(config: GridConfig, inputs: Mapping[str, str] | None = None,
             horizon: int | None = None) -> GridRun:
    """Run ``config`` for ``horizon`` global ticks.

    ``inputs`` and ``horizon`` default to the values carried by the config.
    Raises :class:`UnresolvedConflict` (with the partial run attached) when a
    conflict cannot be settled under the config's policy.
    """
    problems = validate_grid(config)
    if problems:
        raise GridValidationError(problems)
    if horizon is None:
        horizon = config.horizon if config.horizon is not None else 0
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    words = dict(config.inputs)
    words.update(inputs or {})

    members = config.members
    ids = [m.id for m in members]
    machines = [compile_spec(m.spec) for m in members]
    cfgs = [initial_config(m.spec, words.get(m.id, "")) for m in members]
    for m, w in zip(members, cfgs):
        bad = set(w.input) - (set(m.spec.alphabet) - {m.spec.blank})
        if bad:
            raise GridValidationError([f"input for {m.id} has symbols outside its alphabet: {sorted(bad)}"])
    blank = config.blank
    policy = config.effective_policy
    space = CommSpace(policy=policy, blank=blank)
    trace = Trace()
    events = trace.events

    seed = [("init", cell, sym) for cell, sym in enumerate(config.initial_space)
            if sym not in (blank, PLACEHOLDER)]
    if seed:
        space.commit(0, seed, events)

    everyone = tuple(range(len(members)))
    if all(m.scale.kind == "identity" for m in members):
        slots = None
    else:
        slots = [[] for _ in range(horizon + 1)]
        for k, m in enumerate(members):
            for t in ticks_upto(m.scale, horizon):
                slots[t].append(k)

    ctl = config.controller
    pending: list[tuple[str, int | None, str]] = []
    view = _SpaceView if ctl is not None and ctl.mode == "global" else _OpenView
    views = [view(space.cells, blank, pending, mid) for mid in ids]
    last = [Outcome.RUNNING] * len(members)
    schedule = config.schedule
    always_on = schedule.source == "computable" and schedule.rule == "always"

    director = directive = None
    arbiter = ctl.arbiter_spec if ctl is not None else None
    if ctl is not None and ctl.mode == "global":
        director = compile_spec(ctl.spec)
        dcfg = initial_config(ctl.spec)
        dview = _SpaceView(space.cells, blank, [], ctl.id)

    resolve = allow = None
    if policy == "controller-arbitrated" and arbiter is not None:
        def resolve(conflict):
            winner = arbitrate(arbiter, conflict, ctl.budget)
            if winner is None:
                raise UnresolvedConflict(conflict, result(), "arbiter gave no valid answer")
            return winner, ctl.id
    if director is not None:
        def allow(cell):
            return directive is not None and directive.write and directive.covers(cell)

    def result():
        trace.status = {
            ids[k]: (_status(machines[k], cfgs[k], last[k]), cfgs[k].state, cfgs[k].clock)
            for k in range(len(members))
        }
        trace.final = space.snapshot()
        outputs = {ids[k]: cfgs[k].output_words() for k in range(len(members))}
        return GridRun(trace, outputs, space, dict(zip(ids, cfgs)))

    add = events.append
    commit = space.commit
    lone = space.commit_lone
    gated = not always_on or director is not None
    units = [(k, ids[k], machines[k], cfgs[k], views[k]) for k in everyone]
    if slots is not None:
        slots = [[units[k] for k in ks] for ks in slots]
    live = units
    halted: set[int] = set()
    try:
        for t in range(1, horizon + 1):
            if director is not None:
                action = advance(director, dcfg, dview)
                if type(action) is tuple and action[7] is not None and action[8] == 0:
                    sym = action[7]
                    directive = ctl.directives[sym]
                    add((t, "directive", ctl.id, sym))
                    for v in views:
                        v.directive = directive
            for k, mid, m, cfg, view in live if slots is None else slots[t]:
                if halted and k in halted:
                    continue
                if gated:
                    if not always_on and not admits(schedule, t, mid):
                        add((t, "move", mid, "wait"))
                        continue
                    if director is not None and (directive is None or mid not in directive.members):
                        add((t, "move", mid, "held"))
                        continue
                action = advance(m, cfg, view)
                if type(action) is tuple:
                    add((t, "move", mid, "step"))
                    if action[7] is not None:
                        add((t, "emit", mid, action[8] + 1, action[7]))
                else:
                    last[k] = action
                    add((t, "move", mid, action.value))
                    if action is HALTED:
                        # frozen from here on; later slots are dropped from the trace
                        halted.add(k)
                        live = [u for u in live if u[0] != k]
            if pending:
                if allow is None and len(pending) == 1:
                    lone(t, pending[0], events)
                else:
                    commit(t, pending, events, resolve, allow)
                pending.clear()
    except ConflictError as exc:
        pending.clear()
        raise UnresolvedConflict(exc.conflict, result(), f"policy {policy}") from None
    return result()

