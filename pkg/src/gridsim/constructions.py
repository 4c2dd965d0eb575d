"""Ready-made machines and grids.

The oracle-driven builders take a finite binary word standing in for an
arbitrary externally supplied sequence; each grid reproduces that word (or
a fixed transduction of it) in its outputs or in the space.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

from gridsim.equivalence import (
    INJECTED_SCHEDULE,
    IRRATIONAL_SCALE,
    MISSING_CONTROLLER,
    NON_UNIFORM_SCALE,
    ORACLE_CELL_CHOICE,
    ORACLE_INITIAL_INFO,
    ORACLE_PARTNER,
)
from gridsim.grid import Controller, Directive, GridConfig, Member, run_grid
from gridsim.machine import MachineSpec, Rule, machine, run
from gridsim.scheduling import TimeScaleMap, identity, injected, irrational, table

BITS = ("_", "0", "1")


@dataclass(frozen=True)
class OracleStream:
    bits: str
    role: str = "initial-information"

    def __post_init__(self):
        if not self.bits:
            raise ValueError("oracle stream must be nonempty")
        if set(self.bits) - {"0", "1"}:
            raise ValueError("oracle stream must be a binary word")


def _bits(oracle: OracleStream | str) -> str:
    if isinstance(oracle, OracleStream):
        return oracle.bits
    return OracleStream(oracle).bits


COPIER = """\
name: copier
alphabet: _ 0 1
states: q h
output_states: q
final_states: h
start: q
tapes: in work out1
rule: q 0 * -> q - R S emit 0 -> out1
rule: q 1 * -> q - R S emit 1 -> out1
rule: q _ * -> h - S S
"""

# copies whatever appears in the space, cell by cell, waiting on blanks
SPACE_COPIER = """\
name: space-copier
alphabet: _ 0 1
states: q
output_states: q
start: q
tapes: in work out1 comm
rule: q * * 0 -> q - - S S R emit 0 -> out1
rule: q * * 1 -> q - - S S R emit 1 -> out1
rule: q * * _ -> q - - S S S
"""

# writes its symbol to the first free cell on every even move
WRITER_EVEN = """\
name: even-writer
alphabet: _ 0 1
states: odd even
start: odd
tapes: in work comm
rule: odd * * * -> even - - S S S
rule: even * * * -> odd - +{sym} S S S
"""

# writes its symbol to the first free cell on every odd move
WRITER_ODD = """\
name: odd-writer
alphabet: _ 0 1
states: odd even
start: odd
tapes: in work comm
rule: odd * * * -> even - +{sym} S S S
rule: even * * * -> odd - - S S S
"""

WRITER_EVERY = """\
name: writer
alphabet: _ 0 1
states: w
start: w
tapes: in work comm
rule: w * * * -> w - +{sym} S S S
"""

PAIR_WRITER = """\
name: pair-writer
alphabet: _ 0 1
states: s t0 t1 h
final_states: h
start: s
tapes: in work comm
rule: s 1 * * -> t1 - 1 R S R
rule: s 0 * * -> t0 - - R S R
rule: s _ * * -> h - - S S S
rule: t1 * * * -> s - - S S R
rule: t0 * * * -> s - 1 S S R
"""

# Scans pairs left to right. Once B's 1 is visible in a pair, the pair's other
# cell is the first free cell of the space, so an append fills it. Outputs the
# bit the pair stands for at that move. The two idle moves at the start keep A
# one pair behind B; without them A just bounces inside an unmarked pair.
PAIR_FILLER = """\
name: pair-filler
alphabet: _ 0 1
states: W0 W1 L LR SK
output_states: L SK
start: W0
tapes: in work out1 comm
rule: W0 * * * -> W1 - - S S S
rule: W1 * * * -> L - - S S S
rule: L * * 1 -> SK - +0 S S R emit 1 -> out1
rule: L * * _ -> LR - - S S R
rule: LR * * 1 -> L - +0 S S R emit 0 -> out1
rule: LR * * _ -> L - - S S L
rule: SK * * * -> L - - S S R
"""

PAIR_DECODER = """\
name: pair-decoder
alphabet: _ 0 1
states: d s0 s1
output_states: d
start: d
tapes: in work out1 comm
rule: d * * 1 -> s1 - - S S R
rule: d * * 0 -> s0 - - S S R
rule: d * * _ -> d - - S S S
rule: s1 * * 0 -> d - - S S R emit 1 -> out1
rule: s0 * * 1 -> d - - S S R emit 0 -> out1
rule: s1 * * _ -> s1 - - S S S
rule: s0 * * _ -> s0 - - S S S
rule: s1 * * 1 -> s1 - - S S S
rule: s0 * * 0 -> s0 - - S S S
"""


@lru_cache(maxsize=None)
def _machine(text: str) -> MachineSpec:
    return machine(text)


def copier() -> MachineSpec:
    """Copies its input word to ``out1`` and halts."""
    return _machine(COPIER)


def space_copier() -> MachineSpec:
    return _machine(SPACE_COPIER)


def scripted_emitter(word: str, name: str = "scripted") -> MachineSpec:
    """Table-driven machine appending ``word`` to the space, one symbol per move, then halting."""
    n = len(word)
    states = tuple(f"s{k}" for k in range(n + 1))
    rules = tuple(
        Rule(f"s{k}", ("*", "*", "*"), f"s{k + 1}", write_comm=b, comm_append=True, moves=("S", "S", "S"))
        for k, b in enumerate(word)
    )
    return MachineSpec(alphabet=BITS, states=states, start="s0", rules=rules,
                       final_states=frozenset({f"s{n}"}), outputs=0, comm=True, name=name)


def pair_writer() -> MachineSpec:
    """Reads the oracle from its input; round ``n`` puts a 1 into the left
    cell of pair ``n`` when bit ``n`` is 1, into the right cell otherwise.
    Two moves per round; halts at the end of the input."""
    return _machine(PAIR_WRITER)


def pair_filler() -> MachineSpec:
    return _machine(PAIR_FILLER)


def pair_cell_decoder() -> MachineSpec:
    """Scans filled pairs left to right: ``01`` emits 0, ``10`` emits 1; waits on an incomplete pair."""
    return _machine(PAIR_DECODER)


def alternating_writers(scale_a: TimeScaleMap | None = None,
                        scale_b: TimeScaleMap | None = None, horizon: int | None = None) -> GridConfig:
    """A appends 0 on its even moves, B appends 1 on its odd moves."""
    scale_a = scale_a or identity()
    scale_b = scale_b or identity()
    a = _machine(WRITER_EVEN.format(sym="0"))
    b = _machine(WRITER_ODD.format(sym="1"))
    kinds = {scale_a.kind, scale_b.kind}
    if "table" in kinds:
        label = "desync"
    elif "irrational" in kinds:
        label = "uniform_incommensurable"
    else:
        label = "alternating_writers"
    return GridConfig(
        members=(Member("A", a, scale_a, frozenset({"append-0-even"})),
                 Member("B", b, scale_b, frozenset({"append-1-odd"}))),
        horizon=horizon, construction=label)


def ten_to_one(horizon: int = 40) -> GridConfig:
    """B's first move takes ten of A's moves; afterwards both run in step."""
    return alternating_writers(identity(), table(range(10, horizon + 1)), horizon)


def pair_cell_encoder(oracle: OracleStream | str) -> GridConfig:
    """B marks one cell of each pair per the oracle; A fills the sibling with
    0 and outputs 1 for a ``10`` pair, 0 for a ``01`` pair.

    Pair ``n`` (1-based) occupies the 1-based cells ``2n-1, 2n``; internally
    cells are 0-based, so the pair sits at ``2n-2, 2n-1``.
    """
    bits = _bits(oracle)
    members = (
        Member("A", pair_filler(), rules=frozenset({"fill-sibling"})),
        Member("B", pair_writer(), rules=frozenset({"mark-pair"}), oracle="cell-choice"),
    )
    # B marks pair n by tick 2n, A fills it at ticks 2n+1 and 2n+2
    return GridConfig(members=members, inputs={"B": bits}, horizon=2 * len(bits) + 2,
                      construction="pair_cell_encoder")


def expand_pairs(bits: str) -> str:
    return "".join("10" if b == "1" else "01" for b in bits)


def decode_space(word: str) -> str:
    """Run the pair decoder over a space holding ``word``; returns its output."""
    # alone on the space nothing changes under the decoder, so a standalone
    # run is the same as a one-member grid without the trace
    return run(pair_cell_decoder(), "", len(word) + 2, space=word).outputs[0]


def oracle_initial_info(oracle: OracleStream | str) -> GridConfig:
    """Single copier whose input tape is preloaded with the oracle word."""
    bits = _bits(oracle)
    return GridConfig(members=(Member("A", copier(), oracle="initial-information"),),
                      inputs={"A": bits}, horizon=len(bits) + 1, construction="oracle_initial_info")


def oracle_partner(oracle: OracleStream | str) -> GridConfig:
    """B replays the oracle into the space; A copies the space to its output."""
    bits = _bits(oracle)
    return GridConfig(
        members=(Member("A", space_copier(), rules=frozenset({"copy-space"})),
                 Member("B", scripted_emitter(bits), rules=frozenset({"emit-oracle"}),
                        oracle="partner-output")),
        horizon=len(bits) + 1, construction="oracle_partner")


def scheduled_exchange(oracle: OracleStream | str) -> GridConfig:
    """Tick ``t`` admits A (appends 0) if bit ``t`` is 1, else B (appends 1)."""
    bits = _bits(oracle)
    return GridConfig(
        members=(Member("A", _machine(WRITER_EVERY.format(sym="0")), rules=frozenset({"append-0"})),
                 Member("B", _machine(WRITER_EVERY.format(sym="1")), rules=frozenset({"append-1"}))),
        schedule=injected("A" if b == "1" else "B" for b in bits),
        horizon=len(bits), construction="scheduled_exchange")


# ---------------------------------------------------------------------------
# controllers


def director(symbols: str, alphabet: tuple[str, ...] | None = None) -> MachineSpec:
    """Cycles through ``symbols``, emitting one per move."""
    alphabet = alphabet or ("_",) + tuple(sorted(set(symbols)))
    n = len(symbols)
    rules = tuple(
        Rule(f"c{k}", ("*", "*"), f"c{(k + 1) % n}", moves=("S", "S"), emit=(sym, 1))
        for k, sym in enumerate(symbols)
    )
    states = tuple(f"c{k}" for k in range(n))
    return MachineSpec(alphabet=alphabet, states=states, start="c0", rules=rules,
                       output_states=frozenset(states), name="director")


def arbiter(alphabet: tuple[str, ...] = BITS, pick: str = "first") -> MachineSpec:
    """Reads the two contending symbols and emits one: ``first``, ``second``,
    ``max`` or ``min`` (by position in ``alphabet``)."""
    syms = [s for s in alphabet if s != "_"]
    rank = {s: k for k, s in enumerate(alphabet)}
    rules = []
    states = ["s", "e", "h"]
    for x in syms:
        rules.append(Rule("s", (x, "*"), f"r{x}", moves=("R", "S")))
        states.append(f"r{x}")
        for y in syms:
            if pick == "first":
                w = x
            elif pick == "second":
                w = y
            elif pick == "max":
                w = x if rank[x] >= rank[y] else y
            elif pick == "min":
                w = x if rank[x] <= rank[y] else y
            else:
                raise ValueError(f"unknown pick {pick!r}")
            rules.append(Rule(f"r{x}", (y, "*"), "e", moves=("S", "S"), emit=(w, 1)))
    rules.append(Rule("e", ("*", "*"), "h", moves=("S", "S")))
    return MachineSpec(alphabet=tuple(alphabet), states=tuple(states), start="s", rules=tuple(rules),
                       output_states=frozenset({"e"}), final_states=frozenset({"h"}), name=f"arbiter-{pick}")


def with_controller(config: GridConfig, mode: str = "global", pick: str = "first") -> GridConfig:
    """Attach the trivial controller C: every member always allowed, conflicts to ``pick``."""
    alphabet = config.members[0].spec.alphabet
    if mode == "local":
        ctl = Controller("C", arbiter(alphabet, pick), mode="local")
    else:
        ctl = Controller("C", director("a"), directives={"a": Directive(frozenset(config.ids))},
                         arbiter=arbiter(alphabet, pick))
    return replace(config, controller=ctl)


# ---------------------------------------------------------------------------
# registry


# the premise each construction breaks; None = flattenable
SOURCES = {
    "alternating_writers": MISSING_CONTROLLER,
    "controlled_writers": None,
    "desync": NON_UNIFORM_SCALE,
    "uniform_incommensurable": IRRATIONAL_SCALE,
    "scheduled_exchange": INJECTED_SCHEDULE,
    "pair_cell_encoder": ORACLE_CELL_CHOICE,
    "oracle_partner": ORACLE_PARTNER,
    "oracle_initial_info": ORACLE_INITIAL_INFO,
}


def build(name: str, oracle: str | None = None, horizon: int | None = None) -> GridConfig:
    """Construct by registry name, as used by the command line."""
    name = name.replace("-", "_")
    needs_oracle = {"scheduled_exchange", "pair_cell_encoder", "oracle_partner", "oracle_initial_info"}
    if name in needs_oracle and not oracle:
        raise ValueError(f"construction {name!r} needs --oracle")
    if name == "alternating_writers":
        cfg = alternating_writers(horizon=8)
    elif name == "desync":
        cfg = ten_to_one(horizon or 40)
    elif name == "uniform_incommensurable":
        cfg = alternating_writers(irrational("sqrt2"), identity(), horizon=20)
    elif name == "controlled_writers":
        cfg = replace(with_controller(alternating_writers(horizon=8)), construction="controlled_writers")
    elif name in needs_oracle:
        cfg = globals()[name](oracle)
    else:
        raise ValueError(f"unknown construction {name!r}")
    if horizon is not None:
        cfg = replace(cfg, horizon=horizon)
    return cfg


CONSTRUCTIONS = ("alternating_writers", "desync", "uniform_incommensurable", "controlled_writers",
                 "scheduled_exchange", "pair_cell_encoder", "oracle_partner", "oracle_initial_info")

