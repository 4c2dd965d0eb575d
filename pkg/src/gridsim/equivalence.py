"""Flattening controlled grids into one sequential execution, and the
dovetailing enumerator for machine outputs.

A grid under a global controller whose members all run on rational scales
has a periodic move pattern, so its whole schedule can be written out in
advance as a flat instruction list. :class:`FlatExecution` does that and
runs the list with its own interpreter, sharing nothing with ``run_grid``
except the single-machine step function. :func:`check_equivalence` runs
both and compares them.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Mapping, NamedTuple, Sequence

from gridsim.grid import GridConfig, UnresolvedConflict, run_grid
from gridsim.machine import (
    HALTED,
    STUCK,
    MachineConfig,
    MachineSpec,
    PrivateComm,
    Rule,
    advance,
    compile_spec,
    initial_config,
    run,
    words,
)
from gridsim.scheduling import admits
from gridsim.space import Conflict, WriteEvent

# premises of flattening, and the source each violation points at
ORACLE_INITIAL_INFO = "oracle initial info"
ORACLE_PARTNER = "oracle partner"
ORACLE_CELL_CHOICE = "oracle cell choice"
INJECTED_SCHEDULE = "injected schedule"
IRRATIONAL_SCALE = "irrational scale"
NON_UNIFORM_SCALE = "non-uniform scale"
MISSING_CONTROLLER = "missing controller"

SOURCES = (ORACLE_INITIAL_INFO, ORACLE_PARTNER, ORACLE_CELL_CHOICE, INJECTED_SCHEDULE,
           IRRATIONAL_SCALE, NON_UNIFORM_SCALE, MISSING_CONTROLLER)

_ROLE_SOURCE = {
    "initial-information": ORACLE_INITIAL_INFO,
    "partner-output": ORACLE_PARTNER,
    "cell-choice": ORACLE_CELL_CHOICE,
    "exchange-schedule": INJECTED_SCHEDULE,
}


class NotFlattenable(NamedTuple):
    """Why a grid cannot be flattened; ``sources`` lists every violated premise."""

    sources: tuple[str, ...]
    details: tuple[str, ...] = ()

    @property
    def source(self) -> str:
        return self.sources[0]

    def __str__(self):
        return "not flattenable: " + "; ".join(self.details or self.sources)


class NotFlattenableError(ValueError):
    def __init__(self, verdict: NotFlattenable):
        self.verdict = verdict
        super().__init__(str(verdict))


def premises(config: GridConfig) -> NotFlattenable | None:
    sources, details = [], []

    def add(source, detail):
        if source not in sources:
            sources.append(source)
        details.append(detail)

    for m in config.members:
        if m.oracle is not None:
            add(_ROLE_SOURCE[m.oracle], f"{m.id} is fed an oracle ({m.oracle})")
    if config.schedule.source == "injected":
        add(INJECTED_SCHEDULE, "exchange schedule is an injected sequence")
    for m in config.members:
        if m.scale.kind == "irrational":
            add(IRRATIONAL_SCALE, f"{m.id} runs on an irrational scale ({m.scale.alpha.name})")
        elif m.scale.kind == "table":
            add(NON_UNIFORM_SCALE, f"{m.id} runs on a table scale")
    c = config.controller
    if c is None:
        add(MISSING_CONTROLLER, "no controller")
    elif c.mode != "global":
        add(MISSING_CONTROLLER, f"controller {c.id} has local control only")
    if sources:
        return NotFlattenable(tuple(sources), tuple(details))
    return None


def flatten(config: GridConfig) -> FlatExecution | NotFlattenable:
    """Compile ``config`` into a :class:`FlatExecution`, or say which premise fails."""
    verdict = premises(config)
    if verdict is not None:
        return verdict
    return FlatExecution(config)


# ---------------------------------------------------------------------------
# the flat program


class FlatResult(NamedTuple):
    writes: list[WriteEvent]
    cells: dict[int, str]
    outputs: dict[str, tuple[str, ...]]

    def snapshot(self) -> str:
        top = max(self.cells, default=-1)
        return "".join(self.cells.get(i, "_") for i in range(top + 1))


class _Reader:
    __slots__ = ("cells", "blank", "window", "pending", "writer")
    gated = True

    def __init__(self, cells, blank, pending=None, writer=None):
        self.cells = cells
        self.blank = blank
        self.window = None
        self.pending = pending
        self.writer = writer

    def read(self, cell):
        w = self.window
        if w is not None and not w(cell):
            return self.blank
        return self.cells.get(cell, self.blank)

    def write(self, cell, symbol):
        self.pending.append((self.writer, cell, symbol))


@dataclass
class FlatExecution:
    """One instruction stream for a whole controlled grid.

    Instructions: ``("direct", t)`` moves the controller, ``("step", t, k)``
    moves member ``k``, ``("commit", t)`` settles the tick's writes. Members
    the schedule does not admit get no instruction. Within a tick the order
    is controller, then members in declaration order.
    """

    config: GridConfig

    def __post_init__(self):
        self.period = 1
        for m in self.config.members:
            self.period = math.lcm(self.period, m.scale.m if m.scale.kind == "rational" else 1)

    def _movers(self, t: int) -> list[int]:
        # a scale of n moves per m ticks has made floor(t*n/m) moves by tick t
        out = []
        for k, m in enumerate(self.config.members):
            if m.scale.kind == "identity":
                out.append(k)
            elif (t * m.scale.n) // m.scale.m > ((t - 1) * m.scale.n) // m.scale.m:
                out.append(k)
        return out

    def expand(self, horizon: int) -> list[tuple]:
        """The instruction list for ``horizon`` ticks."""
        pattern = [self._movers(r) for r in range(1, self.period + 1)]
        schedule = self.config.schedule
        ids = self.config.ids
        always = schedule.source == "computable" and schedule.rule == "always"
        prog = []
        for t in range(1, horizon + 1):
            prog.append(("direct", t))
            for k in pattern[(t - 1) % self.period]:
                if always or admits(schedule, t, ids[k]):
                    prog.append(("step", t, k))
            prog.append(("commit", t))
        return prog

    def run(self, inputs: Mapping[str, str] | None = None, horizon: int | None = None) -> FlatResult:
        cfg = self.config
        if horizon is None:
            horizon = cfg.horizon or 0
        words_in = dict(cfg.inputs)
        words_in.update(inputs or {})
        ids = cfg.ids
        ctl = cfg.controller
        blank = cfg.blank
        policy = cfg.effective_policy

        # combined state record
        cells: dict[int, str] = {i: c for i, c in enumerate(cfg.initial_space) if c not in ("_", blank)}
        writes = [WriteEvent(0, "init", i, c) for i, c in sorted(cells.items())]
        machines = [compile_spec(m.spec) for m in cfg.members]
        confs = [initial_config(m.spec, words_in.get(m.id, "")) for m in cfg.members]
        halted = [False] * len(ids)
        pending: list[tuple[str, int | None, str]] = []
        readers = [_Reader(cells, blank, pending, mid) for mid in ids]
        director = compile_spec(ctl.spec)
        dconf = initial_config(ctl.spec)
        dreader = _Reader(cells, blank)
        directive = None
        arbiter = ctl.arbiter_spec

        def window(cell):
            return directive.read and directive.covers(cell)

        for ins in self.expand(horizon):
            op, t = ins[0], ins[1]
            if op == "direct":
                before = len(dconf.outputs[0])
                advance(director, dconf, dreader)
                if len(dconf.outputs[0]) > before:
                    directive = ctl.directives[dconf.outputs[0][-1]]
                    for r in readers:
                        r.window = window
            elif op == "step":
                k = ins[2]
                if halted[k] or directive is None or ids[k] not in directive.members:
                    continue
                if advance(machines[k], confs[k], readers[k]) is HALTED:
                    halted[k] = True
            else:
                self._commit(t, pending, cells, writes, directive, policy, arbiter, ctl)
                pending.clear()
        outputs = {mid: c.output_words() for mid, c in zip(ids, confs)}
        return FlatResult(writes, cells, outputs)

    @staticmethod
    def _commit(t, pending, cells, writes, directive, policy, arbiter, ctl):
        this_tick: dict[int, WriteEvent] = {}
        for writer, cell, symbol in pending:
            if cell is None:
                cell = 0
                while cell in cells:
                    cell += 1
            if directive is None or not (directive.write and directive.covers(cell)):
                continue
            prior = this_tick.get(cell)
            if prior is not None and prior.symbol != symbol and policy != "priority-order":
                conflict = Conflict(prior, WriteEvent(t, writer, cell, symbol))
                winner = None
                pair = prior.symbol + symbol
                if (policy == "controller-arbitrated" and arbiter is not None
                        and set(pair) <= set(arbiter.alphabet) - {arbiter.blank}):
                    out = run(arbiter, pair, ctl.budget).outputs
                    if out and out[0] and out[0][0] in (prior.symbol, symbol):
                        winner = out[0][0]
                if winner is None:
                    raise UnresolvedConflict(conflict, None, "flat execution")
                writer, symbol = ctl.id, winner
            ev = WriteEvent(t, writer, cell, symbol)
            cells[cell] = symbol
            this_tick[cell] = ev
            writes.append(ev)


# ---------------------------------------------------------------------------
# equivalence


class Equal(NamedTuple):
    horizon: int
    writes: int

    def __bool__(self):
        return True


class Divergence(NamedTuple):
    """First point where the concurrent run and the flat execution disagree."""

    what: str  # write | space | output | conflict
    index: int | str
    grid: object
    flat: object

    def __bool__(self):
        return False

    def __str__(self):
        return f"divergence in {self.what} at {self.index}: grid {self.grid!r}, flat {self.flat!r}"


def check_equivalence(config: GridConfig, inputs: Mapping[str, str] | None = None,
                      horizon: int | None = None) -> Equal | Divergence:
    """Run ``config`` concurrently and flattened and compare writes, space and outputs."""
    flat = flatten(config)
    if isinstance(flat, NotFlattenable):
        raise NotFlattenableError(flat)
    if horizon is None:
        horizon = config.horizon or 0
    g_err = f_err = None
    try:
        g = run_grid(config, inputs, horizon)
    except UnresolvedConflict as exc:
        g, g_err = None, exc.conflict
    try:
        f = flat.run(inputs, horizon)
    except UnresolvedConflict as exc:
        f, f_err = None, exc.conflict
    if g_err is not None or f_err is not None:
        if g_err == f_err:
            return Equal(horizon, -1)
        return Divergence("conflict", "unresolved", g_err, f_err)
    gw = g.space.write_log
    for i, (a, b) in enumerate(itertools.zip_longest(gw, f.writes)):
        if a != b:
            return Divergence("write", i, a, b)
    if g.space.cells != f.cells:
        return Divergence("space", "final", g.snapshot(), f.snapshot())
    for mid in config.ids:
        if g.outputs[mid] != f.outputs[mid]:
            return Divergence("output", mid, g.outputs[mid], f.outputs[mid])
    return Equal(horizon, len(gw))


# ---------------------------------------------------------------------------
# enumeration


class Entry(NamedTuple):
    index: int  # position of the input in the word order
    input: str
    output: str  # word on out1
    budget: int  # moves allowed when the output was first complete


@dataclass(frozen=True)
class EnumerationCertificate:
    machine: str
    budget: int
    entries: tuple[Entry, ...]

    @property
    def outputs(self) -> set[str]:
        return {e.output for e in self.entries}

    def text(self) -> str:
        lines = [f"# enumeration {self.machine or '-'} budget {self.budget}"]
        lines += [f"{e.index} {e.input} {e.output} {e.budget}" for e in self.entries]
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str) -> EnumerationCertificate:
        lines = [ln for ln in text.splitlines() if ln.strip()]
        _, _, name, _, budget = lines[0].split()
        entries = []
        for ln in lines[1:]:
            i, w, o, b = ln.split()
            entries.append(Entry(int(i), w, o, int(b)))
        return cls("" if name == "-" else name, int(budget), tuple(entries))


def length_lex(spec: MachineSpec) -> Iterator[str]:
    """Nonempty words over the machine's input symbols in length-lex order."""
    return words(tuple(s for s in spec.alphabet if s != spec.blank), include_empty=False)


def enumerate_outputs(spec: MachineSpec, word_order: Iterable[str] | None = None,
                      diagonal_budget: int = 64) -> EnumerationCertificate:
    """Dovetail inputs against move budgets.

    Stage ``s`` (``0..diagonal_budget``) admits input ``s`` and lets every
    admitted input run until it has used ``s`` moves. A run that halts with
    a nonempty ``out1`` word is recorded once, with budget ``s``; a direct
    run of that input for ``s`` moves reproduces it.
    """
    if diagonal_budget < 0:
        raise ValueError("budget must be non-negative")
    order = iter(word_order if word_order is not None else length_lex(spec))
    machine = compile_spec(spec)
    live: list[tuple[int, str, MachineConfig, PrivateComm]] = []
    entries = []
    for s in range(diagonal_budget + 1):
        w = next(order, None)
        if w is not None:
            c = initial_config(spec, w)
            live.append((s, w, c, PrivateComm(c, spec.blank)))
        still = []
        for idx, w, c, comm in live:
            outcome = None
            while c.clock < s:
                outcome = advance(machine, c, comm)
                if outcome is HALTED or outcome is STUCK:
                    break
            if c.state in spec.final_states:
                out = c.output_words()
                if out and out[0]:
                    entries.append(Entry(idx, w, out[0], s))
            elif outcome is not STUCK:
                still.append((idx, w, c, comm))
        live = still
    return EnumerationCertificate(spec.name, diagonal_budget, tuple(entries))


def replay_entry(spec: MachineSpec, entry: Entry) -> bool:
    """Does a direct run of ``entry.input`` for ``entry.budget`` moves give ``entry.output``?"""
    res = run(spec, entry.input, entry.budget)
    return res.status is HALTED and bool(res.outputs) and res.outputs[0] == entry.output


def machine_order(spec: MachineSpec, separator: str, budget: int) -> list[str]:
    """Word order produced by an ordering machine: its ``out1`` within
    ``budget`` moves on empty input, split at ``separator``; an unfinished
    last word is dropped."""
    out = run(spec, "", budget).outputs[0]
    return out.split(separator)[:-1]


def finite_set_emitter(targets: Iterable[str], alphabet: Sequence[str] = ("0", "1"),
                       name: str = "set-emitter") -> MachineSpec:
    """Machine whose outputs over all inputs are exactly ``targets``.

    Reads its input through a trie of the targets; on a word in the set it
    writes that word to ``out1`` and halts, otherwise it halts silently.
    """
    targets = sorted(set(targets))
    for w in targets:
        if not w or set(w) - set(alphabet):
            raise ValueError(f"target {w!r} is empty or uses symbols outside the alphabet")
    prefixes = sorted({w[:i] for w in targets for i in range(len(w) + 1)}, key=lambda p: (len(p), p))
    node = {p: f"n{i}" for i, p in enumerate(prefixes)}
    rules = []
    states = list(node.values()) + ["done"]
    for p in prefixes:
        for a in alphabet:
            rules.append(Rule(node[p], (a, "*"), node[p + a] if p + a in node else "done", moves=("R", "S")))
        if p in set(targets):
            # spell the word out, one symbol per move
            chain = [f"{node[p]}e{j}" for j in range(len(p))]
            states += chain
            rules.append(Rule(node[p], ("_", "*"), chain[0]))
            for j, sym in enumerate(p):
                nxt = chain[j + 1] if j + 1 < len(p) else "done"
                rules.append(Rule(chain[j], ("*", "*"), nxt, emit=(sym, 1)))
        else:
            rules.append(Rule(node[p], ("_", "*"), "done"))
    outs = frozenset(s for r in rules if r.emit for s in [r.to_state])
    return MachineSpec(alphabet=("_",) + tuple(alphabet), states=tuple(states), start=node[""],
                       rules=tuple(rules), output_states=outs, final_states=frozenset({"done"}),
                       outputs=1, name=name)


# ---------------------------------------------------------------------------
# partitions of an input stream


class Segment(NamedTuple):
    word: str
    output: str
    status: str


def segments(stream: str, cuts: Sequence[int]) -> list[str]:
    bounds = [0, *cuts, len(stream)]
    return [stream[a:b] for a, b in zip(bounds, bounds[1:])]


def partition_harness(stream: str, cuts: Sequence[int] | Callable[[str], Sequence[int]],
                      spec: MachineSpec, budget: int) -> list[Segment]:
    """Cut ``stream`` at ``cuts`` and run ``spec`` on every piece.

    ``cuts`` is a strictly increasing list inside ``(0, len(stream))`` or a
    function producing one from the stream.
    """
    if callable(cuts):
        cuts = cuts(stream)
    cuts = list(cuts)
    if any(not 0 < c < len(stream) for c in cuts) or any(b <= a for a, b in zip(cuts, cuts[1:])):
        raise ValueError("cuts must be strictly increasing and inside the stream")
    out = []
    for piece in segments(stream, cuts):
        res = run(spec, piece, budget)
        out.append(Segment(piece, res.outputs[0] if res.outputs else "", res.status.value))
    return out


def every(n: int) -> Callable[[str], list[int]]:
    """Computable partition: a cut every ``n`` symbols."""
    return lambda s: list(range(n, len(s), n))
