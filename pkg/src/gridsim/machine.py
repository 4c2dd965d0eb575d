"""Deterministic Turing machines with one input tape, one working tape and
``k`` append-only output tapes.

A machine may additionally declare a ``comm`` tape: a head on the shared
communication space. Standalone runs back it with a private scratch tape;
grid runs route its reads and writes through the shared space.

Symbols are single characters. ``*`` (wildcard read), ``-`` (no write),
``+`` (append-write prefix) and ``#`` (comment) are reserved.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field, replace
from typing import Iterable, NamedTuple

RESERVED = frozenset("*-+#")
WILDCARD = "*"
MOVES = {"L": -1, "R": 1, "S": 0}


class Outcome(enum.Enum):
    RUNNING = "running"
    HALTED = "halted"
    STUCK = "stuck"
    HORIZON = "horizon"


HALTED = Outcome.HALTED
STUCK = Outcome.STUCK


class MachineFormatError(ValueError):
    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        where = ""
        if source is not None:
            where += f"{source}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class Rule(NamedTuple):
    """One transition.

    ``reads`` covers the readable tapes in roster order (input, work[, comm]);
    ``moves`` has the same arity. ``write_work`` / ``write_comm`` are ``None``
    for no-op. ``comm_append`` sends the comm write to the first free cell of
    the space instead of the head cell.
    """

    from_state: str
    reads: tuple[str, ...]
    to_state: str
    write_work: str | None = None
    write_comm: str | None = None
    comm_append: bool = False
    moves: tuple[str, ...] = ("S", "S")
    emit: tuple[str, int] | None = None  # (symbol, output tape 1..k)


@dataclass(frozen=True)
class MachineSpec:
    alphabet: tuple[str, ...]
    states: tuple[str, ...]
    start: str
    rules: tuple[Rule, ...]
    output_states: frozenset[str] = frozenset()
    final_states: frozenset[str] = frozenset()
    outputs: int = 1
    comm: bool = False
    blank: str = "_"
    name: str = ""

    @property
    def readable(self) -> tuple[str, ...]:
        return ("in", "work", "comm") if self.comm else ("in", "work")

    @property
    def tapes(self) -> tuple[str, ...]:
        outs = tuple(f"out{i}" for i in range(1, self.outputs + 1))
        return ("in", "work") + outs + (("comm",) if self.comm else ())


class _Where:
    __slots__ = ("n", "state")

    def __init__(self, n, state):
        self.n, self.state = n, state

    def __format__(self, spec):
        return f"rule {self.n} ({self.state})"


class Violation(NamedTuple):
    kind: str
    detail: str


def validate(spec: MachineSpec) -> list[Violation]:
    """Every invariant violation of ``spec``; empty iff well-formed."""
    report = []
    alphabet = set(spec.alphabet)
    states = set(spec.states)
    arity = len(spec.readable)
    for sym in spec.alphabet:
        if len(sym) != 1 or sym in RESERVED or sym.isspace():
            report.append(Violation("symbol", f"bad symbol {sym!r}"))
    if spec.blank not in alphabet:
        report.append(Violation("blank", f"blank {spec.blank!r} not in alphabet"))
    if spec.start not in states:
        report.append(Violation("start", f"start state {spec.start!r} not in states"))
    for s in sorted(spec.output_states - states):
        report.append(Violation("output_states", f"output state {s!r} not in states"))
    for s in sorted(spec.final_states - states):
        report.append(Violation("final_states", f"final state {s!r} not in states"))
    if spec.outputs < 0:
        report.append(Violation("tapes", "negative number of output tapes"))

    for n, r in enumerate(spec.rules, 1):
        where = _Where(n, r.from_state)
        for s in (r.from_state, r.to_state):
            if s not in states:
                report.append(Violation("state", f"{where}: unknown state {s!r}"))
        if r.from_state in spec.final_states:
            report.append(Violation("final", f"{where}: rule leaves a final state"))
        if len(r.reads) != arity or len(r.moves) != arity:
            report.append(Violation("arity", f"{where}: expected {arity} reads and moves"))
        for sym in r.reads:
            if sym != WILDCARD and sym not in alphabet:
                report.append(Violation("symbol", f"{where}: read {sym!r} not in alphabet"))
        for m in r.moves:
            if m not in MOVES:
                report.append(Violation("move", f"{where}: bad move {m!r}"))
        if r.write_work is not None and r.write_work not in alphabet:
            report.append(Violation("symbol", f"{where}: write {r.write_work!r} not in alphabet"))
        if r.write_comm is not None or r.comm_append:
            if not spec.comm:
                report.append(Violation("comm", f"{where}: comm write without comm tape"))
            elif r.write_comm is None or r.write_comm not in alphabet:
                report.append(Violation("symbol", f"{where}: comm write {r.write_comm!r} not in alphabet"))
            elif r.write_comm == spec.blank:
                report.append(Violation("blank", f"{where}: blank written to the shared space"))
        if r.emit is not None:
            sym, tape = r.emit
            if sym not in alphabet:
                report.append(Violation("symbol", f"{where}: emit {sym!r} not in alphabet"))
            if sym == spec.blank:
                report.append(Violation("blank", f"{where}: blank emitted to an output tape"))
            if not 1 <= tape <= spec.outputs:
                report.append(Violation("tapes", f"{where}: no output tape out{tape}"))
            if r.to_state not in spec.output_states:
                report.append(Violation("output_states", f"{where}: emits while entering non-output state {r.to_state!r}"))

    by_state: dict[str, list[Rule]] = {}
    for r in spec.rules:
        by_state.setdefault(r.from_state, []).append(r)
    for state, rules in by_state.items():
        for a, b in itertools.combinations(rules, 2):
            if len(a.reads) == len(b.reads) and all(
                x == y or WILDCARD in (x, y) for x, y in zip(a.reads, b.reads)
            ):
                key = ",".join(a.reads)
                report.append(Violation("nondeterminism", f"overlapping rules at ({state},{key})"))
    return report


class InvalidMachine(ValueError):
    def __init__(self, report):
        self.report = report
        super().__init__("; ".join(v.detail for v in report))


@dataclass(slots=True)
class MachineConfig:
    state: str
    input: str
    work: dict[int, str] = field(default_factory=dict)
    outputs: list[list[str]] = field(default_factory=list)
    heads: list[int] = field(default_factory=lambda: [0, 0, 0])  # in, work, comm
    clock: int = 0
    scratch: dict[int, str] = field(default_factory=dict)  # private comm tape

    @property
    def tape_contents(self) -> dict[str, object]:
        tapes = {"in": self.input, "work": dict(self.work)}
        for i, out in enumerate(self.outputs, 1):
            tapes[f"out{i}"] = "".join(out)
        return tapes

    @property
    def head_positions(self) -> dict[str, int]:
        return {"in": self.heads[0], "work": self.heads[1], "comm": self.heads[2]}

    def output_words(self) -> tuple[str, ...]:
        return tuple("".join(out) for out in self.outputs)

    def copy(self) -> MachineConfig:
        return replace(
            self,
            work=dict(self.work),
            outputs=[list(o) for o in self.outputs],
            heads=list(self.heads),
            scratch=dict(self.scratch),
        )


def initial_config(spec: MachineSpec, word: str = "") -> MachineConfig:
    return MachineConfig(state=spec.start, input=word, outputs=[[] for _ in range(spec.outputs)])


class Compiled:
    """Rule table expanded over wildcards into a flat dict for fast lookup.

    Key: ``(state, in, work, comm)`` (``comm`` is ``None`` for machines
    without a comm tape). Value: ``(to_state, write_work, write_comm,
    append, d_in, d_work, d_comm, emit_symbol, emit_index)``. States whose
    only rule reads nothing but wildcards go to ``blind`` instead, and
    states whose rules look at one tape only go to ``single`` as
    ``(tape index, {symbol: action})``.
    """

    __slots__ = ("spec", "table", "blind", "single", "final", "blank", "comm")

    def __init__(self, spec: MachineSpec, report: list[Violation] | None = None):
        report = validate(spec) if report is None else report
        if report:
            raise InvalidMachine(report)
        self.spec = spec
        self.final = spec.final_states
        self.blank = spec.blank
        self.comm = spec.comm
        self.table = {}
        self.blind = {}
        self.single = {}
        alphabet = spec.alphabet
        looks: dict[str, set[int]] = {}
        for r in spec.rules:
            looks.setdefault(r.from_state, set()).update(i for i, x in enumerate(r.reads) if x != WILDCARD)
        for r in spec.rules:
            d = [MOVES[m] for m in r.moves] + ([0] if not spec.comm else [])
            emit_sym, emit_idx = (r.emit[0], r.emit[1] - 1) if r.emit else (None, -1)
            action = (r.to_state, r.write_work, r.write_comm, r.comm_append,
                      d[0], d[1], d[2], emit_sym, emit_idx)
            if all(x == WILDCARD for x in r.reads):
                # determinism makes this the state's only rule
                self.blind[r.from_state] = action
                continue
            tapes = looks[r.from_state]
            if len(tapes) == 1:
                (i,) = tapes
                _, sub = self.single.setdefault(r.from_state, (i, {}))
                sub[r.reads[i]] = action
            choices = [alphabet if x == WILDCARD else (x,) for x in r.reads]
            if not spec.comm:
                choices.append((None,))
            for key in itertools.product(*choices):
                self.table[(r.from_state,) + key] = action


_cache: dict[int, tuple[MachineSpec, list[Violation], Compiled | None]] = {}


def _entry(spec: MachineSpec):
    hit = _cache.get(id(spec))
    if hit is not None and hit[0] is spec:
        return hit
    report = validate(spec)
    compiled = None if report else Compiled(spec, report)
    if len(_cache) > 4096:
        _cache.clear()
    hit = _cache[id(spec)] = (spec, report, compiled)
    return hit


def check(spec: MachineSpec) -> list[Violation]:
    """:func:`validate`, memoised per spec object."""
    return list(_entry(spec)[1])


def compile_spec(spec: MachineSpec) -> Compiled:
    _, report, compiled = _entry(spec)
    if compiled is None:
        raise InvalidMachine(report)
    return compiled


class PrivateComm:
    """Comm tape of a standalone run: immediate writes into the config's scratch map."""

    gated = False

    def __init__(self, cfg: MachineConfig, blank: str):
        self.cells = cfg.scratch
        self.blank = blank

    def read(self, cell):
        return self.cells.get(cell, self.blank)

    def write(self, cell, symbol):
        if cell is None:
            cell = 0
            while cell in self.cells:
                cell += 1
        self.cells[cell] = symbol


def advance(machine: Compiled, cfg: MachineConfig, comm):
    """Apply one move to ``cfg`` in place.

    Returns the applied action tuple (see :class:`Compiled`), or ``HALTED`` /
    ``STUCK`` when no move was made.

    ``comm`` provides ``read(cell)`` and ``write(cell, symbol)``, where
    ``cell`` is ``None`` for an append write, plus a ``gated`` flag; when it
    is false reads go straight to ``comm.cells``. It may be ``None`` for
    machines without a comm tape.
    """
    state = cfg.state
    if state in machine.final:
        return HALTED
    heads = cfg.heads
    action = machine.blind.get(state)
    if action is None and state in machine.single:
        tape, sub = machine.single[state]
        blank = machine.blank
        if tape == 2:
            sym = comm.read(heads[2]) if comm.gated else comm.cells.get(heads[2], blank)
        elif tape == 0:
            h_in = heads[0]
            sym = cfg.input[h_in] if h_in < len(cfg.input) else blank
        else:
            sym = cfg.work.get(heads[1], blank)
        action = sub.get(sym)
        if action is None:
            return STUCK
    elif action is None:
        blank = machine.blank
        h_in = heads[0]
        sym_in = cfg.input[h_in] if h_in < len(cfg.input) else blank
        sym_work = cfg.work.get(heads[1], blank)
        if machine.comm:
            # ungated windows read the cell map directly, saving a call per move
            sym_comm = comm.read(heads[2]) if comm.gated else comm.cells.get(heads[2], blank)
        else:
            sym_comm = None
        action = machine.table.get((state, sym_in, sym_work, sym_comm))
        if action is None:
            return STUCK
    to_state, w_work, w_comm, append, d_in, d_work, d_comm, e_sym, e_idx = action
    if w_work is not None:
        cfg.work[heads[1]] = w_work
    if w_comm is not None:
        comm.write(None if append else heads[2], w_comm)
    if e_sym is not None:
        cfg.outputs[e_idx].append(e_sym)
    # one-sided tapes: a left move at cell 0 stays put
    if d_in:
        h = heads[0] + d_in
        heads[0] = h if h > 0 else 0
    if d_work:
        h = heads[1] + d_work
        heads[1] = h if h > 0 else 0
    if d_comm:
        h = heads[2] + d_comm
        heads[2] = h if h > 0 else 0
    cfg.state = to_state
    cfg.clock += 1
    return action


def step(spec: MachineSpec, config: MachineConfig) -> MachineConfig | Outcome:
    """Successor configuration, or ``HALTED`` / ``STUCK``. ``config`` is not mutated."""
    machine = compile_spec(spec)
    nxt = config.copy()
    outcome = advance(machine, nxt, PrivateComm(nxt, spec.blank))
    return outcome if isinstance(outcome, Outcome) else nxt


class RunResult(NamedTuple):
    config: MachineConfig
    outputs: tuple[str, ...]
    status: Outcome


def run(spec: MachineSpec, word: str = "", horizon: int = 1000, space: str = "") -> RunResult:
    """Run until halted, stuck, or ``horizon`` moves.

    ``status`` is ``Outcome.HORIZON`` when the budget ran out first. ``space``
    preloads the comm tape (``_`` cells stay blank).
    """
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    machine = compile_spec(spec)
    bad = set(word) - (set(spec.alphabet) - {spec.blank})
    if bad:
        raise ValueError(f"input symbols not in alphabet: {sorted(bad)}")
    cfg = initial_config(spec, word)
    if space:
        cfg.scratch.update((i, c) for i, c in enumerate(space) if c not in ("_", spec.blank))
    comm = PrivateComm(cfg, spec.blank)
    status = Outcome.HORIZON
    for _ in range(horizon):
        outcome = advance(machine, cfg, comm)
        if outcome is HALTED or outcome is STUCK:
            status = outcome
            break
    else:
        # budget spent; a machine that just entered F is halted, not exhausted
        if cfg.state in spec.final_states:
            status = HALTED
    return RunResult(cfg, cfg.output_words(), status)


# ---------------------------------------------------------------------------
# text format


_HEADERS = ("name", "alphabet", "blank", "states", "output_states",
            "final_states", "start", "tapes")


def parse_machine(text: str, source: str | None = None) -> MachineSpec:
    """Parse the line-oriented machine description format.

    Header lines ``key: values...``; rule lines::

        rule: <state> <reads...> -> <state> <writes...> <moves...> [emit <sym> -> <tape>]

    There is one read and one move per readable tape (``in work [comm]``) and
    one write per writable tape (``work [comm]``). ``*`` reads any symbol,
    ``-`` writes nothing, ``+s`` appends ``s`` to the first free cell of the
    communication space.
    """
    header: dict[str, list[str]] = {}
    rule_lines = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, rest = line.partition(":")
        key = key.strip()
        if not sep:
            raise MachineFormatError(f"expected 'key: value', got {line!r}", lineno, source)
        if key == "rule":
            rule_lines.append((lineno, rest.split()))
        elif key in _HEADERS:
            if key in header:
                raise MachineFormatError(f"duplicate header {key!r}", lineno, source)
            header[key] = rest.split()
        else:
            raise MachineFormatError(f"unknown header {key!r}", lineno, source)
    for key in ("alphabet", "states", "start", "tapes"):
        if key not in header:
            raise MachineFormatError(f"missing header {key!r}", None, source)

    tapes = header["tapes"]
    if tapes[:2] != ["in", "work"]:
        raise MachineFormatError("tapes must start with 'in work'", None, source)
    comm = tapes[-1] == "comm"
    outs = tapes[2:-1] if comm else tapes[2:]
    if outs != [f"out{i}" for i in range(1, len(outs) + 1)]:
        raise MachineFormatError(f"output tapes must be out1..outk, got {outs}", None, source)
    if len(header["start"]) != 1:
        raise MachineFormatError("start takes exactly one state", None, source)
    blank = header.get("blank", ["_"])
    if len(blank) != 1:
        raise MachineFormatError("blank takes exactly one symbol", None, source)

    nread = 3 if comm else 2
    nwrite = 2 if comm else 1
    rules = []
    for lineno, toks in rule_lines:
        try:
            rules.append(_parse_rule(toks, nread, nwrite))
        except (ValueError, IndexError) as exc:
            raise MachineFormatError(f"bad rule: {exc}", lineno, source) from None
    return MachineSpec(
        alphabet=tuple(header["alphabet"]),
        states=tuple(header["states"]),
        start=header["start"][0],
        rules=tuple(rules),
        output_states=frozenset(header.get("output_states", [])),
        final_states=frozenset(header.get("final_states", [])),
        outputs=len(outs),
        comm=comm,
        blank=blank[0],
        name=" ".join(header.get("name", [])),
    )


def _parse_rule(toks: list[str], nread: int, nwrite: int) -> Rule:
    arrow = toks.index("->")
    if arrow != 1 + nread:
        raise ValueError(f"expected state and {nread} reads before '->'")
    from_state, reads = toks[0], tuple(toks[1:arrow])
    rest = toks[arrow + 1:]
    emit = None
    k = 1 + nwrite + nread
    if len(rest) > k and rest[k] == "emit":
        tail = rest[k:]
        if len(tail) != 4 or tail[2] != "->" or not tail[3].startswith("out"):
            raise ValueError("emit clause is 'emit <sym> -> out<k>'")
        emit = (tail[1], int(tail[3][3:]))
        rest = rest[:k]
    if len(rest) != 1 + nwrite + nread:
        raise ValueError(f"expected target state, {nwrite} writes and {nread} moves")
    to_state = rest[0]
    writes = rest[1:1 + nwrite]
    moves = tuple(rest[1 + nwrite:])
    work = None if writes[0] == "-" else writes[0]
    comm_sym, append = None, False
    if nwrite == 2 and writes[1] != "-":
        comm_sym = writes[1]
        if comm_sym.startswith("+"):
            comm_sym, append = comm_sym[1:], True
    return Rule(from_state, reads, to_state, work, comm_sym, append, moves, emit)


def format_machine(spec: MachineSpec) -> str:
    """Canonical text form; ``parse_machine(format_machine(s)) == s``."""
    lines = []
    if spec.name:
        lines.append(f"name: {spec.name}")
    lines += [
        f"alphabet: {' '.join(spec.alphabet)}",
        f"blank: {spec.blank}",
        f"states: {' '.join(spec.states)}",
        f"output_states: {' '.join(sorted(spec.output_states))}".rstrip(),
        f"final_states: {' '.join(sorted(spec.final_states))}".rstrip(),
        f"start: {spec.start}",
        f"tapes: {' '.join(spec.tapes)}",
    ]
    for r in spec.rules:
        writes = [r.write_work or "-"]
        if spec.comm:
            if r.write_comm is None:
                writes.append("-")
            else:
                writes.append(("+" if r.comm_append else "") + r.write_comm)
        parts = ["rule:", r.from_state, *r.reads, "->", r.to_state, *writes, *r.moves]
        if r.emit:
            parts += ["emit", r.emit[0], "->", f"out{r.emit[1]}"]
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def machine(text: str) -> MachineSpec:
    """Parse and validate in one go; raises :class:`InvalidMachine`."""
    spec = parse_machine(text)
    report = validate(spec)
    if report:
        raise InvalidMachine(report)
    return spec


def words(alphabet: Iterable[str], include_empty: bool = False):
    """Length-lexicographic enumeration of words over ``alphabet``."""
    alphabet = list(alphabet)
    if include_empty:
        yield ""
    for n in itertools.count(1):
        for tup in itertools.product(alphabet, repeat=n):
            yield "".join(tup)
