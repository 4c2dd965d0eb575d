import math

import numpy as np
import pytest

import oracles
from gridsim.scheduling import (
    admits,
    alternate,
    always,
    format_scale,
    format_schedule,
    identity,
    injected,
    interleaving,
    irrational,
    lcm_period,
    move_ticks,
    parse_scale,
    parse_schedule,
    period,
    rational,
    seeded_random,
    table,
    ticks_upto,
)


def test_identity():
    assert move_ticks(identity(), 5) == 5


def test_sqrt2_prefix():
    got = [move_ticks(irrational("sqrt2"), i) for i in range(1, 11)]
    assert got == [oracles.floor_sqrt2(i) for i in range(1, 11)]
    assert got == [1, 2, 4, 5, 7, 8, 9, 11, 12, 14]


def test_rational_one_in_ten():
    assert move_ticks(rational(1, 10), 1) == 10
    assert move_ticks(rational(1, 10), 2) == 20


def test_rational_ceil_rule():
    s = rational(2, 3)
    assert [move_ticks(s, i) for i in range(1, 7)] == [math.ceil(i * 3 / 2) for i in range(1, 7)]


def test_table_bounds():
    s = table([3, 4, 9])
    assert move_ticks(s, 3) == 9
    with pytest.raises(IndexError):
        move_ticks(s, 4)
    with pytest.raises(ValueError):
        table([3, 3])


def test_scale_argument_checks():
    with pytest.raises(ValueError):
        rational(3, 2)
    with pytest.raises(ValueError):
        move_ticks(identity(), 0)


def test_interleaving_synchronous():
    got = interleaving([("A", identity()), ("B", identity())], 3)
    assert got == [(1, "A"), (1, "B"), (2, "A"), (2, "B"), (3, "A"), (3, "B")]


def test_interleaving_ten_to_one():
    got = interleaving([("A", identity()), ("B", rational(1, 10))], 10)
    assert got[:9] == [(t, "A") for t in range(1, 10)]
    assert got[9:] == [(10, "A"), (10, "B")]


def test_interleaving_sqrt2():
    got = interleaving([("A", identity()), ("B", irrational("sqrt2"))], 5)
    want = oracles.merge_ticks([("A", range(1, 6)), ("B", oracles.sqrt2_ticks(5))])
    assert got == want
    # floor(4*sqrt2) = 5, so B's fourth move lands inside the horizon
    assert got == [(1, "A"), (1, "B"), (2, "A"), (2, "B"), (3, "A"), (4, "A"), (4, "B"), (5, "A"), (5, "B")]


def test_interleaving_needs_a_machine():
    with pytest.raises(ValueError):
        interleaving([], 3)
    assert interleaving([("A", identity())], 0) == []


def test_beatty_exact_large():
    s = irrational("sqrt2")
    for i in (10**6, 10**9 + 7, 123456789012345):
        assert move_ticks(s, i) == oracles.floor_sqrt2(i)


def test_beatty_array_matches_scalar():
    s = irrational("sqrt2")
    idx = np.arange(1, 3000)
    arr = move_ticks(s, idx)
    assert arr.tolist() == [move_ticks(s, int(i)) for i in idx]


def test_golden():
    s = irrational("golden")
    # floor(i*phi) with phi = (1+sqrt5)/2: 2i*phi = i + sqrt(5 i^2)
    want = [(i + math.isqrt(5 * i * i)) // 2 for i in range(1, 200)]
    assert [move_ticks(s, i) for i in range(1, 200)] == want


def test_uniformity_two_gaps():
    s = irrational("sqrt2")
    ticks = move_ticks(s, np.arange(1, 20001))
    for k in (1, 2, 3, 7, 50):
        gaps = set((ticks[k:] - ticks[:-k]).tolist())
        assert len(gaps) <= 2


def test_commensurable_collapse():
    for m in range(1, 13):
        for n in range(1, m + 1):
            s = rational(n, m)
            p = lcm_period([s])
            ts = set(ticks_upto(s, 4 * p))
            pattern = [t in ts for t in range(1, 4 * p + 1)]
            assert pattern[p:] == pattern[:-p]


def test_ticks_upto_matches_move_ticks():
    for s in (identity(), rational(3, 7), irrational("sqrt2"), table([2, 5, 6, 30])):
        ts = ticks_upto(s, 25)
        i = 1
        want = []
        while True:
            try:
                t = move_ticks(s, i)
            except IndexError:
                break
            if t > 25:
                break
            want.append(t)
            i += 1
        assert ts == want


def test_admits_always_and_injected():
    assert all(admits(always(), t, mid) for t in range(20) for mid in "AB")
    sched = injected(["A", "B", "B", "A"])
    assert [mid for mid in "AB" if admits(sched, 2, mid)] == ["B"]
    assert not admits(sched, 5, "A") and not admits(sched, 5, "B")
    assert not admits(sched, 0, "A")


def test_admits_seeded_random_replays():
    s = seeded_random(7)
    first = [admits(s, t, mid) for t in range(200) for mid in "AB"]
    again = [admits(seeded_random(7), t, mid) for t in range(200) for mid in "AB"]
    assert first == again
    assert 0 < sum(first) < len(first)
    other = [admits(seeded_random(8), t, mid) for t in range(200) for mid in "AB"]
    assert other != first


def test_admits_computable_rules():
    alt = alternate(["A", "B"])
    assert [admits(alt, t, "A") for t in range(1, 5)] == [True, False, True, False]
    per = period([("A", 3, 1)])
    assert [admits(per, t, "A") for t in range(1, 7)] == [True, False, False, True, False, False]
    assert admits(per, 2, "B")


def test_text_forms_round_trip():
    for s in (identity(), rational(2, 5), irrational("sqrt2"), table([1, 4, 9])):
        assert parse_scale(format_scale(s)) == s
    for sch in (always(), alternate(["A", "B"]), period([("A", 2, 0), ("B", 3, 1)]),
                injected(["A", "B", {"A", "B"}, []]), seeded_random(11, 0.75)):
        assert parse_schedule(format_schedule(sch)) == sch
    assert parse_scale("table [10, 11, 12]").table == (10, 11, 12)
    with pytest.raises(ValueError):
        parse_scale("sometimes")
    with pytest.raises(ValueError):
        parse_schedule("never")
