import subprocess
import sys
from dataclasses import replace

from gridsim.cli import CONFLICT, DIVERGED, INVALID, OK, PARSE, main
from gridsim.configfile import write_config
from gridsim.constructions import alternating_writers, with_controller
from gridsim.grid import GridConfig, Member
from gridsim.machine import machine

POKE = "alphabet: _ 0 1\nstates: w\nstart: w\ntapes: in work comm\nrule: w * * * -> w - {} S S S\n"


def files(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir()) if p.suffix in (".txt", ".ini")}


def test_construct_and_run(tmp_path, capsys):
    out = tmp_path / "aw"
    assert main(["construct", "alternating-writers", "--out-dir", str(out), "--run"]) == OK
    printed = capsys.readouterr().out
    assert "regime: implicitly_procedural" in printed
    assert "not flattenable: missing controller" in printed
    assert (out / "space.txt").read_text() == "10101010\n"
    assert (out / "outputs.txt").read_text().startswith("# outputs\n")


def test_rerun_from_manifest_is_byte_identical(tmp_path):
    out = tmp_path / "run1"
    assert main(["construct", "desync", "--out-dir", str(out), "--run"]) == OK
    first = files(out)
    assert main(["run", str(out / "manifest.ini"), "--out-dir", str(out)]) == OK
    assert files(out) == first
    other = tmp_path / "run2"
    assert main(["run", str(out / "manifest.ini"), "--out-dir", str(other)]) == OK
    assert (other / "trace.txt").read_bytes() == first["trace.txt"]
    assert (other / "space.txt").read_text().startswith("0000010101010")


def test_run_with_overrides(tmp_path):
    cfg = write_config(alternating_writers(), tmp_path)
    assert main(["run", str(cfg), "--horizon", "4", "--out-dir", str(tmp_path / "o")]) == OK
    assert (tmp_path / "o" / "space.txt").read_text() == "1010\n"
    manifest = (tmp_path / "o" / "manifest.ini").read_text()
    assert "horizon = 4" in manifest and "config = ../grid.ini" in manifest


def test_malformed_machine(tmp_path, capsys):
    cfg = write_config(alternating_writers(), tmp_path)
    tm = tmp_path / "A.tm"
    tm.write_text(tm.read_text().replace("-> odd - +0 S S S", "-> odd - +0 S S"))
    assert main(["run", str(cfg), "--out-dir", str(tmp_path)]) == PARSE
    err = capsys.readouterr().err.strip()
    assert err.startswith("error: parse: ") and f"{tm}:" in err
    line = int(err.split(f"{tm}:")[1].split(":")[0])
    assert "-> odd" in tm.read_text().splitlines()[line - 1]


def test_classify(tmp_path, capsys):
    base = alternating_writers()
    bare = replace(base, members=tuple(replace(m, rules=frozenset()) for m in base.members))
    mixed = replace(base, members=(base.members[0], replace(base.members[1], rules=frozenset())))
    for cfg, want in ((with_controller(base), "explicitly_procedural"), (bare, "free"),
                      (mixed, "partially_free")):
        path = write_config(cfg, tmp_path / want)
        assert main(["classify", str(path)]) == OK
        assert capsys.readouterr().out == want + "\n"
    assert main(["classify", str(tmp_path / "none.ini")]) == PARSE


def test_flatten_and_check_eq(tmp_path, capsys):
    path = write_config(with_controller(alternating_writers()), tmp_path)
    assert main(["flatten", str(path), "--horizon", "5", "--out-dir", str(tmp_path)]) == OK
    assert capsys.readouterr().out.startswith("flattenable: period 1")
    assert (tmp_path / "flat.txt").read_text().splitlines()[:2] == ["direct 1", "step 1 0"]
    assert main(["check-eq", str(path), "--horizon", "100"]) == OK
    assert capsys.readouterr().out == "equal at horizon 100\n"
    plain = write_config(alternating_writers(), tmp_path / "plain")
    assert main(["flatten", str(plain)]) == OK
    assert "missing controller" in capsys.readouterr().out
    assert main(["check-eq", str(plain)]) == INVALID


def test_conflict_exit(tmp_path, capsys):
    cfg = GridConfig(members=(Member("A", machine(POKE.format("0"))), Member("B", machine(POKE.format("1")))),
                     horizon=3)
    path = write_config(cfg, tmp_path)
    assert main(["run", str(path), "--out-dir", str(tmp_path)]) == CONFLICT
    assert capsys.readouterr().err.startswith("error: conflict: tick 1 cell 0")
    assert (tmp_path / "trace.txt").exists()


def test_validation_exit(tmp_path, capsys):
    path = write_config(alternating_writers(), tmp_path)
    text = path.read_text().replace("[machine B]", "[machine B]\ninput = 012")
    path.write_text(text)
    assert main(["run", str(path), "--out-dir", str(tmp_path)]) == INVALID
    assert capsys.readouterr().err.startswith("error: validation:")


def test_enumerate(tmp_path, capsys):
    write_config(GridConfig(members=(Member("A", machine(
        "name: copier\nalphabet: _ 0 1\nstates: q h\noutput_states: q\nfinal_states: h\nstart: q\n"
        "tapes: in work out1\nrule: q 0 * -> q - R S emit 0 -> out1\n"
        "rule: q 1 * -> q - R S emit 1 -> out1\nrule: q _ * -> h - S S\n")),)), tmp_path)
    assert main(["enumerate", str(tmp_path / "A.tm"), "--budget", "6", "--out-dir", str(tmp_path)]) == OK
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "# enumeration copier budget 6"
    assert (tmp_path / "certificate.txt").read_text() == out


def test_diff_traces(tmp_path, capsys):
    main(["construct", "alternating-writers", "--out-dir", str(tmp_path / "a"), "--run"])
    main(["construct", "desync", "--out-dir", str(tmp_path / "b"), "--run"])
    capsys.readouterr()
    a, b = tmp_path / "a" / "trace.txt", tmp_path / "b" / "trace.txt"
    assert main(["diff-traces", str(a), str(a)]) == OK
    assert capsys.readouterr().out == "identical\n"
    assert main(["diff-traces", str(a), str(b)]) == DIVERGED
    assert capsys.readouterr().out.startswith("first difference at line ")


def test_usage_errors(capsys):
    assert main([]) == PARSE
    assert main(["construct", "nothing"]) == PARSE
    assert main(["construct", "pair-cell-encoder"]) == PARSE
    assert "needs --oracle" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "gridsim.cli", "construct", "scheduled-exchange",
                           "--oracle", "1010", "--out-dir", str(tmp_path), "--run"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "not flattenable: injected schedule" in proc.stdout
    assert (tmp_path / "space.txt").read_text() == "0101\n"
