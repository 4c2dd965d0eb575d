from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from gridsim.constructions import (
    alternating_writers,
    copier,
    decode_space,
    oracle_initial_info,
    oracle_partner,
    pair_cell_encoder,
    scheduled_exchange,
)
from gridsim.equivalence import check_equivalence, enumerate_outputs, partition_harness, replay_entry
from gridsim.grid import Trace, replay, run_grid
from gridsim.machine import format_machine, parse_machine, run
from gridsim.randomgrids import random_grid, random_member_spec
from gridsim.scheduling import interleaving, irrational, move_ticks, rational

bits = st.text("01", min_size=1, max_size=120)
scales = st.integers(1, 9).flatmap(lambda m: st.integers(1, m).map(lambda n: rational(n, m)))


@given(st.integers(1, 10**12))
def test_beatty_exact(i):
    assert move_ticks(irrational("sqrt2"), i) == oracles.floor_sqrt2(i)


@given(st.lists(scales, min_size=1, max_size=3), st.integers(0, 60))
def test_interleaving_is_merge(ss, horizon):
    named = [(f"M{k}", s) for k, s in enumerate(ss)]
    want = oracles.merge_ticks([(mid, [-(-i * s.m // s.n) for i in range(1, horizon + 1)
                                       if -(-i * s.m // s.n) <= horizon]) for mid, s in named])
    assert interleaving(named, horizon) == want


@given(bits)
def test_encoder_round_trip(w):
    res = run_grid(pair_cell_encoder(w))
    assert res.snapshot() == oracles.expand(w)
    assert res.outputs["A"] == (w,)
    assert decode_space(res.snapshot()) == w


@given(bits)
def test_exchange_flips(w):
    assert run_grid(scheduled_exchange(w)).snapshot() == oracles.flip(w)


@given(bits)
def test_copiers(w):
    assert run_grid(oracle_initial_info(w)).outputs["A"] == (w,)
    assert run_grid(oracle_partner(w)).outputs["A"] == (w,)


@given(scales, scales, st.integers(0, 80))
def test_alternating_matches_tick_merge(sa, sb, h):
    a = [-(-i * sa.m // sa.n) for i in range(1, h + 1)]
    b = [-(-i * sb.m // sb.n) for i in range(1, h + 1)]
    assert run_grid(alternating_writers(sa, sb), horizon=h).snapshot() == oracles.alternating_word(a, b, h)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([1, 17, 120]))
def test_random_grid_equivalence(seed, h):
    assert check_equivalence(random_grid(seed), horizon=h)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 120))
def test_trace_replay_and_prefix(seed, h):
    cfg = random_grid(seed)
    long = run_grid(cfg, horizon=h + 20)
    short = run_grid(cfg, horizon=h)
    assert long.trace.history(h)[h] == short.snapshot()
    text = short.trace.text()
    assert replay(Trace.parse(text)).cells == short.space.cells
    assert run_grid(cfg, horizon=h).trace.text() == text


@given(st.integers(0, 10**6))
def test_machine_text_round_trip(seed):
    import random
    spec = random_member_spec(random.Random(seed), 3)
    assert parse_machine(format_machine(spec)) == spec


@given(st.text("01", max_size=30), st.integers(0, 40), st.integers(0, 40))
def test_run_monotone(w, h1, h2):
    lo, hi = sorted((h1, h2))
    a, b = run(copier(), w, lo), run(copier(), w, hi)
    assert b.outputs[0].startswith(a.outputs[0])
    assert a.config.input == w


@given(st.integers(0, 30))
def test_enumeration_entries_replay(budget):
    cert = enumerate_outputs(copier(), None, budget)
    assert all(replay_entry(copier(), e) for e in cert.entries)


@given(st.text("01", min_size=2, max_size=50).flatmap(
    lambda s: st.tuples(st.just(s), st.sets(st.integers(1, len(s) - 1)).map(sorted))))
def test_partition_is_slicing(case):
    s, cuts = case
    assert [seg.output for seg in partition_harness(s, cuts, copier(), 60)] == oracles.slices(s, cuts)
