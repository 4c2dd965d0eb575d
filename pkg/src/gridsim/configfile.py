"""Grid run-config files and run manifests.

A run config is INI text::

    [grid]
    members = A B
    schedule = always
    horizon = 8

    [machine A]
    file = A.tm
    scale = rational 1 2
    input = 0110
    rules = append-0-even

    [controller C]
    file = C.tm
    mode = global
    arbiter = C-arbiter.tm
    directive a = A B read write cells 0 5

Machine paths are relative to the config file. Optional ``[grid]`` keys:
``policy``, ``initial_space``, ``construction``. Optional machine keys:
``oracle``. Optional controller keys: ``budget``.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from gridsim.grid import Controller, Directive, GridConfig, Member
from gridsim.machine import MachineFormatError, MachineSpec, format_machine, parse_machine
from gridsim.scheduling import format_schedule, format_scale, parse_schedule, parse_scale

VERSION = "0.1.0"


class ConfigError(ValueError):
    """Config file problem; ``where`` is ``path`` or ``path:line``."""

    def __init__(self, message: str, where: str = ""):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)


def _read_machine(base: Path, name: str, where: str) -> MachineSpec:
    path = base / name
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read machine file {name}: {exc.strerror}", where) from None
    return parse_machine(text, source=str(path))


def _directive(text: str, where: str) -> Directive:
    words = text.split()
    members, read, write, cells = [], False, False, None
    i = 0
    while i < len(words):
        w = words[i]
        if w == "read":
            read = True
        elif w == "write":
            write = True
        elif w == "cells":
            try:
                cells = (int(words[i + 1]), int(words[i + 2]))
            except (IndexError, ValueError):
                raise ConfigError(f"bad cell window in directive {text!r}", where) from None
            i += 2
        else:
            members.append(w)
        i += 1
    return Directive(frozenset(members), read, write, cells)


def _format_directive(d: Directive) -> str:
    parts = sorted(d.members)
    if d.read:
        parts.append("read")
    if d.write:
        parts.append("write")
    if d.cells is not None:
        parts += ["cells", str(d.cells[0]), str(d.cells[1])]
    return " ".join(parts)


def load_config(path: str | Path) -> GridConfig:
    """Parse a run config. Raises :class:`ConfigError` or
    :class:`~gridsim.machine.MachineFormatError` (naming file and line)."""
    path = Path(path)
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    parser.optionxform = str
    try:
        parser.read_string(path.read_text(), source=str(path))
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
    except configparser.ParsingError as exc:
        line, text = exc.errors[0]
        raise ConfigError(f"cannot parse {text.strip()!r}", f"{path}:{line}") from None
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(exc.message.splitlines()[0], f"{path}:{line}" if line else str(path)) from None
    base = path.parent
    where = str(path)
    if not parser.has_section("grid"):
        raise ConfigError("missing [grid] section", where)
    g = parser["grid"]
    ids = g.get("members", "").split()
    members = []
    for mid in ids:
        sec = f"machine {mid}"
        if not parser.has_section(sec):
            raise ConfigError(f"missing [{sec}] section", where)
        s = parser[sec]
        if "file" not in s:
            raise ConfigError(f"[{sec}] needs a file", where)
        spec = _read_machine(base, s["file"], where)
        try:
            scale = parse_scale(s.get("scale", "identity"))
        except ValueError as exc:
            raise ConfigError(f"[{sec}] {exc}", where) from None
        members.append(Member(mid, spec, scale, frozenset(s.get("rules", "").split()),
                              s.get("oracle") or None))
    inputs = {mid: parser[f"machine {mid}"].get("input", "") for mid in ids}
    inputs = {k: v for k, v in inputs.items() if v}
    controller = None
    ctl_secs = [s for s in parser.sections() if s.startswith("controller ")]
    if len(ctl_secs) > 1:
        raise ConfigError("at most one controller", where)
    if ctl_secs:
        s = parser[ctl_secs[0]]
        cid = ctl_secs[0].split(None, 1)[1]
        spec = _read_machine(base, s["file"], where) if "file" in s else None
        if spec is None:
            raise ConfigError(f"[{ctl_secs[0]}] needs a file", where)
        arb = _read_machine(base, s["arbiter"], where) if s.get("arbiter") else None
        directives = {k.split(None, 1)[1]: _directive(v, where)
                      for k, v in s.items() if k.startswith("directive ")}
        controller = Controller(cid, spec, s.get("mode", "global"), directives, arb,
                                int(s.get("budget", "256")))
    try:
        schedule = parse_schedule(g.get("schedule", "always"))
    except ValueError as exc:
        raise ConfigError(str(exc), where) from None
    horizon = g.get("horizon")
    return GridConfig(
        members=tuple(members), schedule=schedule, controller=controller,
        policy=g.get("policy") or None, initial_space=g.get("initial_space", ""),
        inputs=inputs, horizon=int(horizon) if horizon else None,
        construction=g.get("construction") or None)


def write_config(config: GridConfig, directory: str | Path, name: str = "grid.ini") -> Path:
    """Write ``config`` and its machine files into ``directory``; returns the config path."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    lines = ["[grid]", f"members = {' '.join(config.ids)}",
             f"schedule = {format_schedule(config.schedule)}"]
    if config.policy:
        lines.append(f"policy = {config.policy}")
    if config.initial_space:
        lines.append(f"initial_space = {config.initial_space}")
    if config.horizon is not None:
        lines.append(f"horizon = {config.horizon}")
    if config.construction:
        lines.append(f"construction = {config.construction}")
    for m in config.members:
        write_text(d / f"{m.id}.tm", format_machine(m.spec))
        lines += ["", f"[machine {m.id}]", f"file = {m.id}.tm", f"scale = {format_scale(m.scale)}"]
        if config.inputs.get(m.id):
            lines.append(f"input = {config.inputs[m.id]}")
        if m.rules:
            lines.append(f"rules = {' '.join(sorted(m.rules))}")
        if m.oracle:
            lines.append(f"oracle = {m.oracle}")
    c = config.controller
    if c is not None:
        write_text(d / f"{c.id}.tm", format_machine(c.spec))
        lines += ["", f"[controller {c.id}]", f"file = {c.id}.tm", f"mode = {c.mode}"]
        if c.arbiter is not None:
            write_text(d / f"{c.id}-arbiter.tm", format_machine(c.arbiter))
            lines.append(f"arbiter = {c.id}-arbiter.tm")
        if c.budget != 256:
            lines.append(f"budget = {c.budget}")
        for sym in sorted(c.directives):
            lines.append(f"directive {sym} = {_format_directive(c.directives[sym])}")
    path = d / name
    write_text(path, "\n".join(lines) + "\n")
    return path


def write_text(path: Path, text: str):
    # newline="" keeps "\n" line endings on every platform
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


@dataclass
class RunManifest:
    """Everything needed to reproduce a run's artifacts."""

    config: str
    inputs: dict[str, str] = field(default_factory=dict)
    horizon: int | None = None
    seed: int | None = None
    trace: str = "trace.txt"
    space: str = "space.txt"
    outputs: str = "outputs.txt"
    version: str = VERSION

    def text(self) -> str:
        lines = ["[manifest]", f"config = {self.config}"]
        if self.horizon is not None:
            lines.append(f"horizon = {self.horizon}")
        if self.seed is not None:
            lines.append(f"seed = {self.seed}")
        lines += [f"trace = {self.trace}", f"space = {self.space}", f"outputs = {self.outputs}",
                  f"version = {self.version}"]
        for mid in sorted(self.inputs):
            lines.append(f"input {mid} = {self.inputs[mid]}")
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str, source: str = "<manifest>") -> RunManifest:
        parser = configparser.ConfigParser(interpolation=None, delimiters=("=",))
        parser.optionxform = str
        try:
            parser.read_string(text, source=source)
        except configparser.Error as exc:
            raise ConfigError(exc.message.splitlines()[0], source) from None
        if not parser.has_section("manifest"):
            raise ConfigError("missing [manifest] section", source)
        s = parser["manifest"]
        if "config" not in s:
            raise ConfigError("manifest names no config", source)
        inputs = {k.split(None, 1)[1]: v for k, v in s.items() if k.startswith("input ")}
        return cls(config=s["config"], inputs=inputs,
                   horizon=int(s["horizon"]) if s.get("horizon") else None,
                   seed=int(s["seed"]) if s.get("seed") else None,
                   trace=s.get("trace", "trace.txt"), space=s.get("space", "space.txt"),
                   outputs=s.get("outputs", "outputs.txt"), version=s.get("version", VERSION))


def is_manifest(path: str | Path) -> bool:
    try:
        head = Path(path).read_text().lstrip().splitlines()[:1]
    except OSError:
        return False
    return head == ["[manifest]"]
