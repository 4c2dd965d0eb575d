"""Random controlled grids for equivalence testing.

Members are small total machines over ``_ 0 1`` that read the space, write
to it (in place or by append) and emit. The director cycles through a few
directives and the arbiter settles every conflict, so the grids satisfy
every flattening premise.
"""
from __future__ import annotations

import random

from gridsim.grid import Controller, Directive, GridConfig, Member
from gridsim.machine import MachineSpec, Rule, check
from gridsim.scheduling import alternate, always, identity, period, rational, seeded_random

SYMS = ("_", "0", "1")
_DIRECTIVE_SYMS = ("a", "b", "c")


def random_member_spec(rng: random.Random, states: int = 3, name: str = "m") -> MachineSpec:
    qs = tuple(f"q{i}" for i in range(states))
    rules = []
    for q in qs:
        for c in SYMS:
            write = rng.choice((None, None, "0", "1"))
            append = write is not None and rng.random() < 0.15
            emit = (rng.choice("01"), 1) if rng.random() < 0.3 else None
            rules.append(Rule(q, ("*", "*", c), rng.choice(qs), write_comm=write, comm_append=append,
                              moves=("S", "S", rng.choice("LRSS")), emit=emit))
    outs = frozenset(r.to_state for r in rules if r.emit)
    return MachineSpec(alphabet=SYMS, states=qs, start="q0", rules=tuple(rules), output_states=outs,
                       outputs=1, comm=True, name=name)


def random_director(rng: random.Random, symbols: str, length: int) -> MachineSpec:
    """A ring of ``length`` states; each move may emit a directive symbol."""
    qs = tuple(f"d{i}" for i in range(length))
    rules = []
    for i, q in enumerate(qs):
        emit = (symbols[0] if i == 0 else rng.choice(symbols), 1) if i == 0 or rng.random() < 0.4 else None
        rules.append(Rule(q, ("*", "*"), qs[(i + 1) % length], emit=emit))
    outs = frozenset(r.to_state for r in rules if r.emit)
    return MachineSpec(alphabet=("_",) + tuple(symbols), states=qs, start="d0", rules=tuple(rules),
                       output_states=outs, outputs=1, name="director")


def random_grid(seed: int, members: int | None = None) -> GridConfig:
    """A flattenable grid of 2 or 3 members, fully determined by ``seed``."""
    from gridsim.constructions import arbiter

    rng = random.Random(seed)
    k = members or rng.choice((2, 3))
    ids = list("ABD"[:k])  # C is the controller
    ms = []
    for mid in ids:
        m = rng.randint(1, 4)
        scale = identity() if rng.random() < 0.25 else rational(rng.randint(1, m), m)
        ms.append(Member(mid, random_member_spec(rng, rng.randint(2, 4), mid), scale,
                         rules=frozenset({f"rule-{mid}"})))
    kind = rng.choice(("always", "alternate", "period", "random"))
    if kind == "always":
        schedule = always()
    elif kind == "alternate":
        schedule = alternate(rng.sample(ids, k))
    elif kind == "period":
        schedule = period((mid, p, rng.randrange(p)) for mid in ids for p in [rng.randint(1, 3)])
    else:
        schedule = seeded_random(rng.randrange(2**31), rng.choice((0.5, 0.75)))
    # "a" opens everything, so that contention actually happens
    directives = {"a": Directive(frozenset(ids))}
    for sym in _DIRECTIVE_SYMS[1:]:
        who = frozenset(rng.sample(ids, rng.randint(1, k)))
        cells = None
        if rng.random() < 0.4:
            lo = rng.randint(0, 3)
            cells = (lo, lo + rng.randint(0, 6))
        directives[sym] = Directive(who, read=rng.random() < 0.85, write=rng.random() < 0.9, cells=cells)
    ctl = Controller("C", random_director(rng, "".join(_DIRECTIVE_SYMS), rng.randint(2, 6)),
                     directives=directives,
                     arbiter=arbiter(SYMS, rng.choice(("first", "second", "max", "min"))))
    space = "".join(rng.choice("_01") for _ in range(rng.randint(0, 4)))
    cfg = GridConfig(members=tuple(ms), schedule=schedule, controller=ctl, initial_space=space,
                     construction="random")
    for m in ms:
        assert not check(m.spec), check(m.spec)
    return cfg
