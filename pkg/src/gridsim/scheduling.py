"""Global time, per-machine time scales and exchange schedules.

Global ticks start at 1. A :class:`TimeScaleMap` sends a machine's local
move index ``i >= 1`` to the global tick at which that move happens; every
scale is strictly increasing, so a machine moves at most once per tick.
"""
from __future__ import annotations

import bisect
import hashlib
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


# ---------------------------------------------------------------------------
# quadratic irrationals


@dataclass(frozen=True)
class QuadraticIrrational:
    """A real > 1 given by an eventually periodic continued fraction."""

    name: str
    head: tuple[int, ...]
    period: tuple[int, ...]

    def terms(self):
        yield from self.head
        while True:
            yield from self.period

    def convergents(self):
        """Yield ``(p_k, q_k)``; consecutive convergents bracket the value."""
        p0, q0, p1, q1 = 0, 1, 1, 0
        for a in self.terms():
            p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
            yield p1, q1

    def __float__(self):
        for p, q in self.convergents():
            if q > 10**17:
                return p / q


CONSTANTS = {
    "sqrt2": QuadraticIrrational("sqrt2", (1,), (2,)),
    "sqrt3": QuadraticIrrational("sqrt3", (1,), (1, 2)),
    "sqrt5": QuadraticIrrational("sqrt5", (2,), (4,)),
    "golden": QuadraticIrrational("golden", (1,), (1,)),
    "silver": QuadraticIrrational("silver", (2,), (2,)),
}


_CONVERGENTS: dict[QuadraticIrrational, list[tuple[int, int]]] = {}


def _convergents_past(alpha: QuadraticIrrational, q: int) -> list[tuple[int, int]]:
    """Cached convergent list, long enough to hold two past denominator ``q``."""
    conv = _CONVERGENTS.get(alpha)
    if conv is None or conv[-2][1] < q:
        conv = []
        for pq in alpha.convergents():
            conv.append(pq)
            if len(conv) >= 3 and conv[-2][1] >= 2 * q:
                break
        _CONVERGENTS[alpha] = conv
    return conv


def _bracket(alpha: QuadraticIrrational, min_q: int):
    """Consecutive convergent pairs, starting at the first with ``q >= min_q``."""
    prev = None
    for pq in alpha.convergents():
        if prev is not None and prev[1] >= min_q:
            yield prev, pq
        prev = pq


def beatty(alpha: QuadraticIrrational, i: int) -> int:
    """``floor(i * alpha)`` exactly.

    Consecutive convergents lie on opposite sides of ``alpha``; once both give
    the same floor for ``i``, so does ``alpha``.
    """
    i = int(i)
    conv = _convergents_past(alpha, i)
    k = bisect.bisect_left(conv, max(2, i), key=lambda pq: pq[1])
    for (p0, q0), (p1, q1) in zip(conv[k:], conv[k + 1:]):
        lo, hi = i * p0 // q0, i * p1 // q1
        if lo == hi:
            return lo
    for (p0, q0), (p1, q1) in _bracket(alpha, max(2, i)):
        lo, hi = i * p0 // q0, i * p1 // q1
        if lo == hi:
            return lo
    raise AssertionError("unreachable")


def beatty_array(alpha: QuadraticIrrational, idx) -> np.ndarray:
    """Vectorised :func:`beatty` over a non-negative int array."""
    idx = np.asarray(idx, dtype=np.int64)
    if idx.size == 0:
        return idx.copy()
    top = int(idx.max())
    # deepest bracket whose products fit comfortably in int64
    pair = None
    for (p0, q0), (p1, q1) in _bracket(alpha, 2):
        if max(p0, p1) * max(top, 1) >= 2**62:
            break
        pair = (p0, q0, p1, q1)
    if pair is None:
        return np.array([beatty(alpha, int(i)) for i in idx], dtype=np.int64)
    p0, q0, p1, q1 = pair
    lo = idx * p0 // q0
    hi = idx * p1 // q1
    out = lo.copy()
    for k in np.flatnonzero(lo != hi):
        out[k] = beatty(alpha, int(idx[k]))
    return out


# ---------------------------------------------------------------------------
# time scales


@dataclass(frozen=True)
class TimeScaleMap:
    kind: str = "identity"  # identity | rational | irrational | table
    n: int = 1
    m: int = 1
    alpha: QuadraticIrrational | None = None
    table: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind == "rational":
            if not (1 <= self.n <= self.m):
                raise ValueError("rational scale needs 1 <= n <= m (at most one move per tick)")
        elif self.kind == "irrational":
            if self.alpha is None or float(self.alpha) <= 1:
                raise ValueError("irrational scale needs alpha > 1")
        elif self.kind == "table":
            t = self.table
            if any(x < 1 for x in t) or any(b <= a for a, b in zip(t, t[1:])):
                raise ValueError("table scale must be strictly increasing ticks >= 1")
        elif self.kind != "identity":
            raise ValueError(f"unknown scale kind {self.kind!r}")

    def __str__(self):
        return format_scale(self)


def identity() -> TimeScaleMap:
    return TimeScaleMap()


def rational(n: int, m: int) -> TimeScaleMap:
    """``n`` local moves per ``m`` global ticks."""
    return TimeScaleMap("rational", n=n, m=m)


def irrational(alpha: str | QuadraticIrrational = "sqrt2") -> TimeScaleMap:
    if isinstance(alpha, str):
        alpha = CONSTANTS[alpha]
    return TimeScaleMap("irrational", alpha=alpha)


def table(ticks: Iterable[int]) -> TimeScaleMap:
    return TimeScaleMap("table", table=tuple(int(t) for t in ticks))


def move_ticks(scale: TimeScaleMap, i):
    """Global tick of local move ``i`` (``i >= 1``); ``i`` may be an int array."""
    if isinstance(i, np.ndarray):
        return _move_ticks_array(scale, i)
    if i < 1:
        raise ValueError("local move index starts at 1")
    kind = scale.kind
    if kind == "identity":
        return i
    if kind == "rational":
        return -(-i * scale.m // scale.n)
    if kind == "irrational":
        return beatty(scale.alpha, i)
    if i > len(scale.table):
        raise IndexError(f"table scale has only {len(scale.table)} moves")
    return scale.table[i - 1]


def _move_ticks_array(scale: TimeScaleMap, i: np.ndarray) -> np.ndarray:
    i = i.astype(np.int64)
    if i.size and i.min() < 1:
        raise ValueError("local move index starts at 1")
    kind = scale.kind
    if kind == "identity":
        return i.copy()
    if kind == "rational":
        return -(-i * scale.m // scale.n)
    if kind == "irrational":
        return beatty_array(scale.alpha, i)
    if i.size and i.max() > len(scale.table):
        raise IndexError(f"table scale has only {len(scale.table)} moves")
    return np.asarray(scale.table, dtype=np.int64)[i - 1]


def ticks_upto(scale: TimeScaleMap, horizon: int) -> list[int]:
    """All move ticks ``<= horizon`` in order."""
    if horizon < 1:
        return []
    kind = scale.kind
    if kind == "identity":
        return list(range(1, horizon + 1))
    if kind == "rational":
        n, m = scale.n, scale.m
        return [-(-i * m // n) for i in range(1, horizon * n // m + 1)]
    if kind == "irrational":
        # floor(i*alpha) <= horizon  =>  i <= horizon / alpha < horizon
        ticks = beatty_array(scale.alpha, np.arange(1, horizon + 1))
        return ticks[ticks <= horizon].tolist()
    return [t for t in scale.table if t <= horizon]


def interleaving(scales: Sequence[tuple[str, TimeScaleMap]], horizon: int) -> list[tuple[int, str]]:
    """Merged ``(tick, machine id)`` moves up to ``horizon``; ties follow declaration order."""
    if not scales:
        raise ValueError("need at least one machine")
    events = []
    for order, (mid, scale) in enumerate(scales):
        events.extend((t, order, mid) for t in ticks_upto(scale, horizon))
    events.sort()
    return [(t, mid) for t, _, mid in events]


def is_rational(scale: TimeScaleMap) -> bool:
    return scale.kind in ("identity", "rational")


_SCALE_RE = re.compile(r"^(identity|rational\s+(\d+)\s+(\d+)|irrational\s+(\w+)|table\s*\[(.*)\])$")


def parse_scale(text: str) -> TimeScaleMap:
    """``identity | rational n m | irrational <name> | table [t1, t2, ...]``"""
    m = _SCALE_RE.match(text.strip())
    if not m:
        raise ValueError(f"bad scale {text!r}")
    if m.group(2):
        return rational(int(m.group(2)), int(m.group(3)))
    if m.group(4):
        if m.group(4) not in CONSTANTS:
            raise ValueError(f"unknown irrational constant {m.group(4)!r}")
        return irrational(m.group(4))
    if m.group(5) is not None:
        body = m.group(5).strip()
        return table(int(x) for x in body.split(",")) if body else table(())
    return identity()


def format_scale(scale: TimeScaleMap) -> str:
    if scale.kind == "rational":
        return f"rational {scale.n} {scale.m}"
    if scale.kind == "irrational":
        return f"irrational {scale.alpha.name}"
    if scale.kind == "table":
        return "table [" + ", ".join(map(str, scale.table)) + "]"
    return "identity"


# ---------------------------------------------------------------------------
# exchange schedules


@dataclass(frozen=True)
class ExchangeSchedule:
    """Which machines may access the communication space at each tick.

    ``computable`` rules: ``always``; ``alternate`` (``params`` = ids, tick
    ``t`` admits ``ids[(t-1) % len]``); ``period`` (``params`` = ``(id,
    period, phase)`` triples, admits iff ``t % period == phase``, unlisted
    ids always admitted). ``injected`` holds one admitted-id set per tick
    starting at tick 1; later ticks admit nobody. ``seeded-random`` admits
    ``(t, id)`` with probability ``p`` from a hash of ``(seed, t, id)``.
    """

    source: str = "computable"
    rule: str = "always"
    params: tuple = ()
    prefix: tuple[frozenset[str], ...] = ()
    seed: int = 0
    p: float = 0.5
    _period: dict = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        if self.source not in ("computable", "injected", "seeded-random"):
            raise ValueError(f"unknown schedule source {self.source!r}")
        if self.source == "computable" and self.rule not in ("always", "alternate", "period"):
            raise ValueError(f"unknown computable rule {self.rule!r}")
        if self.rule == "period":
            object.__setattr__(self, "_period", {mid: (k, r) for mid, k, r in self.params})


def always() -> ExchangeSchedule:
    return ExchangeSchedule()


def alternate(ids: Sequence[str]) -> ExchangeSchedule:
    return ExchangeSchedule(rule="alternate", params=tuple(ids))


def period(entries: Iterable[tuple[str, int, int]]) -> ExchangeSchedule:
    return ExchangeSchedule(rule="period", params=tuple((m, int(k), int(r)) for m, k, r in entries))


def injected(sequence: Iterable[str | Iterable[str]]) -> ExchangeSchedule:
    prefix = tuple(frozenset([e]) if isinstance(e, str) else frozenset(e) for e in sequence)
    return ExchangeSchedule(source="injected", rule="", prefix=prefix)


def seeded_random(seed: int, p: float = 0.5) -> ExchangeSchedule:
    return ExchangeSchedule(source="seeded-random", rule="", seed=int(seed), p=float(p))


def admits(schedule: ExchangeSchedule, tick: int, machine_id: str) -> bool:
    if tick < 0:
        raise ValueError("tick must be non-negative")
    src = schedule.source
    if src == "computable":
        rule = schedule.rule
        if rule == "always":
            return True
        if rule == "alternate":
            if tick == 0:
                return False
            ids = schedule.params
            return ids[(tick - 1) % len(ids)] == machine_id
        kr = schedule._period.get(machine_id)
        return kr is None or tick % kr[0] == kr[1]
    if src == "injected":
        return 1 <= tick <= len(schedule.prefix) and machine_id in schedule.prefix[tick - 1]
    digest = hashlib.blake2b(f"{schedule.seed}:{tick}:{machine_id}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") < schedule.p * 2**64


def parse_schedule(text: str) -> ExchangeSchedule:
    """``always | alternate [A, B] | period [A 2 0, B 3 1] | injected [A, B, A+B, -] | random <seed> [p]``"""
    text = text.strip()
    head, _, rest = text.partition(" ")
    rest = rest.strip()
    if head == "always" and not rest:
        return always()
    if head == "random":
        parts = rest.split()
        if len(parts) not in (1, 2):
            raise ValueError(f"bad schedule {text!r}")
        return seeded_random(int(parts[0]), float(parts[1]) if len(parts) == 2 else 0.5)
    if not (rest.startswith("[") and rest.endswith("]")):
        raise ValueError(f"bad schedule {text!r}")
    items = [x.strip() for x in rest[1:-1].split(",")] if rest[1:-1].strip() else []
    if head == "alternate":
        return alternate(items)
    if head == "period":
        return period(tuple(x.split()[0:1]) + tuple(int(v) for v in x.split()[1:]) for x in items)
    if head == "injected":
        return injected(frozenset() if x == "-" else frozenset(x.split("+")) for x in items)
    raise ValueError(f"bad schedule {text!r}")


def format_schedule(schedule: ExchangeSchedule) -> str:
    if schedule.source == "seeded-random":
        return f"random {schedule.seed} {schedule.p!r}"
    if schedule.source == "injected":
        return "injected [" + ", ".join("+".join(sorted(s)) or "-" for s in schedule.prefix) + "]"
    if schedule.rule == "alternate":
        return "alternate [" + ", ".join(schedule.params) + "]"
    if schedule.rule == "period":
        return "period [" + ", ".join(f"{m} {k} {r}" for m, k, r in schedule.params) + "]"
    return "always"


def lcm_period(scales: Iterable[TimeScaleMap]) -> int:
    """Period of the joint move pattern of rational scales."""
    out = 1
    for s in scales:
        if not is_rational(s):
            raise ValueError("only identity/rational scales are periodic")
        m = s.m // math.gcd(s.n, s.m)
        out = out * m // math.gcd(out, m)
    return out
