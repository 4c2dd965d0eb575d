from pathlib import Path

import pytest

from gridsim.configfile import ConfigError, RunManifest, is_manifest, load_config, write_config
from gridsim.constructions import CONSTRUCTIONS, build, with_controller, alternating_writers
from gridsim.grid import run_grid
from gridsim.machine import MachineFormatError
from gridsim.randomgrids import random_grid
from gridsim.scheduling import rational


def test_round_trip_constructions(tmp_path):
    for name in CONSTRUCTIONS:
        cfg = build(name, oracle="10110")
        back = load_config(write_config(cfg, tmp_path / name))
        assert back == cfg, name


def test_round_trip_random_grids(tmp_path):
    for seed in range(10):
        cfg = random_grid(seed)
        back = load_config(write_config(cfg, tmp_path / str(seed)))
        assert run_grid(back, horizon=80).trace.text() == run_grid(cfg, horizon=80).trace.text()


def test_hand_written_config(tmp_path):
    cfg = with_controller(alternating_writers(rational(1, 2)))
    write_config(cfg, tmp_path)
    text = (tmp_path / "grid.ini").read_text()
    assert "scale = rational 1 2" in text
    assert "directive a = A B read write" in text
    (tmp_path / "extra.ini").write_text(text.replace("members = A B", "members = A B\nhorizon = 12"))
    back = load_config(tmp_path / "extra.ini")
    assert back.horizon == 12 and back.controller.directives == cfg.controller.directives


def test_errors(tmp_path):
    p = tmp_path / "g.ini"
    p.write_text("[machine A]\nfile = A.tm\n")
    with pytest.raises(ConfigError, match="missing \\[grid\\]"):
        load_config(p)
    p.write_text("[grid]\nmembers = A\n")
    with pytest.raises(ConfigError, match="machine A"):
        load_config(p)
    p.write_text("[grid]\nmembers = A\n[machine A]\nfile = A.tm\n")
    with pytest.raises(ConfigError, match="cannot read machine file"):
        load_config(p)
    (tmp_path / "A.tm").write_text("alphabet: _ 0 1\nstates: q\nstart: q\ntapes: in work\nrule: q * -> q - S S\n")
    with pytest.raises(MachineFormatError) as exc:
        load_config(p)
    assert str(exc.value).startswith(f"{tmp_path / 'A.tm'}:5:")
    p.write_text("[grid]\nmembers = A\nbroken line\n")
    with pytest.raises(ConfigError) as exc:
        load_config(p)
    assert ":3" in str(exc.value)


def test_manifest_round_trip(tmp_path):
    m = RunManifest(config="grid.ini", inputs={"B": "0110"}, horizon=20, seed=3)
    text = m.text()
    assert RunManifest.parse(text) == m
    p = tmp_path / "manifest.ini"
    p.write_text(text)
    assert is_manifest(p)
    assert not is_manifest(tmp_path / "nothing.ini")
    with pytest.raises(ConfigError):
        RunManifest.parse("[manifest]\nhorizon = 3\n")
