import random
from dataclasses import replace

import pytest

import oracles
from gridsim.constructions import (
    alternating_writers,
    build,
    copier,
    oracle_initial_info,
    oracle_partner,
    pair_cell_encoder,
    scheduled_exchange,
    with_controller,
)
from gridsim.equivalence import (
    INJECTED_SCHEDULE,
    IRRATIONAL_SCALE,
    MISSING_CONTROLLER,
    NON_UNIFORM_SCALE,
    ORACLE_CELL_CHOICE,
    ORACLE_INITIAL_INFO,
    ORACLE_PARTNER,
    Divergence,
    EnumerationCertificate,
    Equal,
    FlatExecution,
    NotFlattenable,
    NotFlattenableError,
    check_equivalence,
    enumerate_outputs,
    every,
    finite_set_emitter,
    flatten,
    machine_order,
    partition_harness,
    replay_entry,
    segments,
)
from gridsim.grid import GridConfig, Member, run_grid
from gridsim.machine import machine, run
from gridsim.randomgrids import random_grid
from gridsim.scheduling import identity, irrational, rational

PARITY = """\
name: even-length
alphabet: _ 0 1
states: e o emit h
output_states: emit
final_states: h
start: e
tapes: in work out1
rule: e 0 * -> o - R S
rule: e 1 * -> o - R S
rule: o 0 * -> e - R S
rule: o 1 * -> e - R S
rule: e _ * -> emit - S S emit 1 -> out1
rule: emit * * -> h - S S
rule: o _ * -> h - S S
"""

SILENT = """\
alphabet: _ 0 1
states: q h
final_states: h
start: q
tapes: in work out1
rule: q * * -> h - S S
"""


def test_flatten_examples():
    cfg = with_controller(alternating_writers())
    assert isinstance(flatten(cfg), FlatExecution)
    bad = with_controller(alternating_writers(irrational("sqrt2"), identity()))
    verdict = flatten(bad)
    assert isinstance(verdict, NotFlattenable) and verdict.source == IRRATIONAL_SCALE
    assert flatten(scheduled_exchange("0110")).source == INJECTED_SCHEDULE


def test_flatten_sources_of_harnesses():
    assert flatten(oracle_partner("1")).source == ORACLE_PARTNER
    assert flatten(oracle_initial_info("1")).source == ORACLE_INITIAL_INFO
    assert flatten(pair_cell_encoder("1")).source == ORACLE_CELL_CHOICE
    assert flatten(build("desync")).source == NON_UNIFORM_SCALE
    assert flatten(alternating_writers()).source == MISSING_CONTROLLER
    local = with_controller(alternating_writers(), mode="local")
    assert flatten(local).source == MISSING_CONTROLLER


def test_flatten_lists_every_violation():
    v = flatten(scheduled_exchange("01"))
    assert v.sources == (INJECTED_SCHEDULE, MISSING_CONTROLLER)
    assert "injected" in str(v)


def test_expand_is_periodic():
    cfg = with_controller(alternating_writers(rational(1, 2), rational(2, 3)))
    flat = flatten(cfg)
    assert flat.period == 6
    prog = flat.expand(12)
    steps = [(ins[1], ins[2]) for ins in prog if ins[0] == "step"]
    first = [(t, k) for t, k in steps if t <= 6]
    second = [(t - 6, k) for t, k in steps if t > 6]
    assert first == second
    assert [ins for ins in prog if ins[0] != "step"][:2] == [("direct", 1), ("commit", 1)]


def test_check_equivalence_examples():
    cfg = with_controller(alternating_writers())
    res = check_equivalence(cfg, horizon=100)
    assert res and isinstance(res, Equal) and res.writes == 100
    assert check_equivalence(cfg, horizon=0) == Equal(0, 0)
    with pytest.raises(NotFlattenableError):
        check_equivalence(scheduled_exchange("01"))


def test_random_grids_equal():
    for seed in range(50):
        assert check_equivalence(random_grid(seed), horizon=200), seed


def test_equal_when_both_stop_on_the_same_conflict():
    # both members write cell 0 every move; an arbiter that never answers
    # leaves the very first conflict unresolved on both sides
    poke = "alphabet: _ 0 1\nstates: w\nstart: w\ntapes: in work comm\nrule: w * * * -> w - {} S S S\n"
    cfg = with_controller(GridConfig(members=(Member("A", machine(poke.format("0"))),
                                              Member("B", machine(poke.format("1"))))))
    cfg = replace(cfg, controller=replace(cfg.controller, arbiter=machine(SILENT)))
    assert check_equivalence(cfg, horizon=100) == Equal(100, -1)


def test_mutated_flat_commit_is_caught(monkeypatch):
    original = FlatExecution._commit

    def reversed_commit(t, pending, *rest):
        pending.reverse()
        return original(t, pending, *rest)

    monkeypatch.setattr(FlatExecution, "_commit", staticmethod(reversed_commit))
    found = [check_equivalence(random_grid(seed), horizon=100) for seed in range(30)]
    bad = [r for r in found if not r]
    assert bad and all(isinstance(r, Divergence) for r in bad)
    assert "divergence" in str(bad[0])


def test_enumerate_copier_first_six():
    cert = enumerate_outputs(copier(), None, 6)
    assert set(oracles.length_lex("01", 6)) <= cert.outputs
    for e in cert.entries:
        assert e.output == e.input


def test_enumerate_silent_machine():
    cert = enumerate_outputs(machine(SILENT), None, 30)
    assert cert.entries == ()


def test_enumerate_parity():
    cert = enumerate_outputs(machine(PARITY), None, 40)
    assert cert.outputs == {"1"}
    assert len(cert.entries) > 1
    assert all(len(e.input) % 2 == 0 for e in cert.entries)


def test_enumeration_replays_and_is_monotone():
    prev = set()
    for b in (0, 5, 10, 20, 40):
        cert = enumerate_outputs(copier(), None, b)
        assert all(replay_entry(copier(), e) for e in cert.entries)
        budgets = [e.budget for e in cert.entries]
        assert budgets == sorted(budgets)
        assert prev <= cert.outputs
        prev = cert.outputs


def test_certificate_text_round_trip():
    cert = enumerate_outputs(copier(), None, 12)
    text = cert.text()
    assert EnumerationCertificate.parse(text) == cert
    assert text.splitlines()[1].split() == ["0", "0", "0", "2"]


def test_custom_word_order():
    order = ["11", "0", "101"]
    cert = enumerate_outputs(copier(), order, 10)
    assert [e.input for e in cert.entries] == ["0", "11", "101"]
    # an ordering machine spelling "1;0;11;" then halting
    spelled = "1;0;11;"
    rules = "".join(f"rule: s{k} * * -> s{k + 1} - S S emit {c} -> out1\n" for k, c in enumerate(spelled))
    states = " ".join(f"s{k}" for k in range(len(spelled) + 1))
    ordering = machine(f"alphabet: _ 0 1 ;\nstates: {states}\noutput_states: {states}\n"
                       f"start: s0\ntapes: in work out1\n{rules}")
    order = machine_order(ordering, ";", 100)
    assert order == ["1", "0", "11"]
    assert machine_order(ordering, ";", 5) == ["1", "0"]
    assert [e.input for e in enumerate_outputs(copier(), order, 10).entries] == ["1", "0", "11"]


def test_finite_set_emitter():
    targets = {"0", "10", "111"}
    spec = finite_set_emitter(targets)
    for w in oracles.length_lex("01", 30):
        out = run(spec, w, 50).outputs[0]
        assert out == (w if w in targets else "")
    assert enumerate_outputs(spec, None, 40).outputs == targets
    with pytest.raises(ValueError):
        finite_set_emitter(["2"])


def test_partition_examples():
    segs = partition_harness("101101", [2, 4], copier(), 20)
    assert [s.word for s in segs] == ["10", "11", "01"]
    assert [s.output for s in segs] == ["10", "11", "01"]
    segs = partition_harness("10" * 6, every(2), copier(), 20)
    assert {s.output for s in segs} == {"10"}


def test_partition_random():
    rng = random.Random(5)
    for _ in range(50):
        s = "".join(rng.choice("01") for _ in range(rng.randint(2, 60)))
        cuts = sorted(rng.sample(range(1, len(s)), rng.randint(0, min(6, len(s) - 1))))
        got = partition_harness(s, cuts, copier(), 100)
        assert [g.output for g in got] == oracles.slices(s, cuts) == segments(s, cuts)


def test_partition_rejects_bad_cuts():
    for cuts in ([3, 2], [0], [6], [2, 2]):
        with pytest.raises(ValueError):
            partition_harness("101101", cuts, copier(), 20)


def test_flat_run_matches_grid_outputs():
    cfg = with_controller(alternating_writers(rational(1, 2), rational(3, 4)))
    flat = flatten(cfg).run(horizon=60)
    grid = run_grid(cfg, horizon=60)
    assert flat.snapshot() == grid.snapshot()
    assert flat.writes == grid.space.write_log
