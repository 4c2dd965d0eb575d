"""``gridsim`` command line.

Exit codes: 0 ok, 1 usage or parse error, 2 validation error, 3 unresolved
conflict, 4 divergence. Errors are reported on stderr as one line,
``error: <kind>: <message>``.
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

from gridsim.configfile import (
    VERSION,
    ConfigError,
    RunManifest,
    write_text,
    is_manifest,
    load_config,
    write_config,
)
from gridsim.constructions import CONSTRUCTIONS, build
from gridsim.equivalence import (
    NotFlattenable,
    NotFlattenableError,
    check_equivalence,
    enumerate_outputs,
    flatten,
)
from gridsim.grid import GridConfig, GridValidationError, UnresolvedConflict, classify, diff_traces, run_grid
from gridsim.machine import InvalidMachine, MachineFormatError, parse_machine

OK, PARSE, INVALID, CONFLICT, DIVERGED = 0, 1, 2, 3, 4


class _Fail(Exception):
    def __init__(self, code: int, kind: str, message: str):
        self.code = code
        self.kind = kind
        super().__init__(message)


def _inputs(pairs) -> dict[str, str]:
    out = {}
    for p in pairs or ():
        mid, sep, word = p.partition("=")
        if not sep:
            raise _Fail(PARSE, "usage", f"--input expects ID=WORD, got {p!r}")
        out[mid] = word
    return out


def _load(path: str) -> GridConfig:
    try:
        return load_config(path)
    except (ConfigError, MachineFormatError) as exc:
        raise _Fail(PARSE, "parse", str(exc)) from None


def _verdict(config: GridConfig) -> str:
    f = flatten(config)
    if isinstance(f, NotFlattenable):
        return "not flattenable: " + ", ".join(f.sources)
    return "flattenable"


def _apply_seed(config: GridConfig, seed: int | None) -> GridConfig:
    if seed is not None and config.schedule.source == "seeded-random":
        return replace(config, schedule=replace(config.schedule, seed=seed))
    return config


def _execute(config: GridConfig, manifest: RunManifest, out_dir: Path) -> int:
    """Run and write trace, space and outputs next to the manifest."""
    out_dir.mkdir(parents=True, exist_ok=True)
    config = _apply_seed(config, manifest.seed)
    code = OK
    try:
        result = run_grid(config, manifest.inputs, manifest.horizon)
    except GridValidationError as exc:
        raise _Fail(INVALID, "validation", str(exc)) from None
    except UnresolvedConflict as exc:
        result = exc.partial
        code = CONFLICT
        print(f"error: conflict: {exc}", file=sys.stderr)
    write_text(out_dir / manifest.trace, result.trace.text())
    write_text(out_dir / manifest.space, result.snapshot() + "\n")
    lines = []
    for mid, words in result.outputs.items():
        for k, w in enumerate(words, 1):
            lines.append(f"{mid} out{k} {w or '-'}")
    write_text(out_dir / manifest.outputs, "".join(x + "\n" for x in ["# outputs", *lines]))
    write_text(out_dir / "manifest.ini", manifest.text())
    print(f"regime: {classify(config)}")
    print(_verdict(config))
    print(f"space: {result.snapshot() or '-'}")
    return code


def cmd_run(args) -> int:
    src = Path(args.config)
    if is_manifest(src):
        try:
            manifest = RunManifest.parse(src.read_text(), str(src))
        except ConfigError as exc:
            raise _Fail(PARSE, "parse", str(exc)) from None
        cfg_path = (src.parent / manifest.config)
        if args.horizon is not None:
            manifest.horizon = args.horizon
        if args.seed is not None:
            manifest.seed = args.seed
        manifest.inputs.update(_inputs(args.input))
    else:
        cfg_path = src
        manifest = RunManifest(config=str(src), inputs=_inputs(args.input), horizon=args.horizon,
                               seed=args.seed)
    config = _load(str(cfg_path))
    out_dir = Path(args.out_dir) if args.out_dir else Path(".")
    if manifest.horizon is None:
        manifest.horizon = config.horizon or 0
    manifest.config = _relpath(cfg_path, out_dir)
    return _execute(config, manifest, out_dir)


def _relpath(target, start) -> str:
    return Path(os.path.relpath(Path(target).resolve(), Path(start).resolve())).as_posix()


def cmd_construct(args) -> int:
    try:
        config = build(args.name, args.oracle, args.horizon)
    except ValueError as exc:
        raise _Fail(PARSE, "usage", str(exc)) from None
    out_dir = Path(args.out_dir or args.name.replace("-", "_"))
    path = write_config(config, out_dir)
    print(path.as_posix())
    if args.run:
        manifest = RunManifest(config=path.name, horizon=config.horizon, seed=args.seed)
        return _execute(config, manifest, out_dir)
    return OK


def cmd_classify(args) -> int:
    print(classify(_load(args.config)))
    return OK


def cmd_flatten(args) -> int:
    config = _load(args.config)
    f = flatten(config)
    if isinstance(f, NotFlattenable):
        print("not flattenable: " + ", ".join(f.sources))
        for d in f.details:
            print(f"  {d}")
        return OK
    horizon = args.horizon if args.horizon is not None else (config.horizon or 0)
    prog = f.expand(horizon)
    print(f"flattenable: period {f.period}, {len(prog)} instructions for horizon {horizon}")
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_text(out / "flat.txt", "".join(" ".join(map(str, ins)) + "\n" for ins in prog))
    return OK


def cmd_check_eq(args) -> int:
    config = _apply_seed(_load(args.config), args.seed)
    try:
        res = check_equivalence(config, _inputs(args.input), args.horizon)
    except NotFlattenableError as exc:
        raise _Fail(INVALID, "validation", str(exc)) from None
    except GridValidationError as exc:
        raise _Fail(INVALID, "validation", str(exc)) from None
    if res:
        print(f"equal at horizon {res.horizon}")
        return OK
    print(str(res))
    return DIVERGED


def cmd_enumerate(args) -> int:
    path = Path(args.machine)
    try:
        spec = parse_machine(path.read_text(), source=str(path))
    except OSError as exc:
        raise _Fail(PARSE, "parse", f"{path}: {exc.strerror}") from None
    except MachineFormatError as exc:
        raise _Fail(PARSE, "parse", str(exc)) from None
    try:
        cert = enumerate_outputs(spec, None, args.budget)
    except InvalidMachine as exc:
        raise _Fail(INVALID, "validation", f"{path}: {exc}") from None
    text = cert.text()
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_text(out / "certificate.txt", text)
    sys.stdout.write(text)
    return OK


def cmd_diff_traces(args) -> int:
    texts = []
    for p in (args.a, args.b):
        try:
            texts.append(Path(p).read_text())
        except OSError as exc:
            raise _Fail(PARSE, "parse", f"{p}: {exc.strerror}") from None
    d = diff_traces(*texts)
    if d is None:
        print("identical")
        return OK
    line, x, y = d
    print(f"first difference at line {line}")
    print(f"< {x}")
    print(f"> {y}")
    return DIVERGED


def parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gridsim", description="Simulate grids of interacting Turing machines.")
    p.add_argument("--version", action="version", version=f"gridsim {VERSION}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a config or manifest and write trace, space and outputs")
    r.add_argument("config")
    r.add_argument("--horizon", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--input", action="append", metavar="ID=WORD")
    r.add_argument("--out-dir")
    r.set_defaults(fn=cmd_run)

    c = sub.add_parser("construct", help="write a built-in construction as a config")
    c.add_argument("name", choices=CONSTRUCTIONS + tuple(n.replace("_", "-") for n in CONSTRUCTIONS),
                   metavar="name")
    c.add_argument("--oracle")
    c.add_argument("--horizon", type=int)
    c.add_argument("--seed", type=int)
    c.add_argument("--out-dir")
    c.add_argument("--run", action="store_true", help="also run it")
    c.set_defaults(fn=cmd_construct)

    k = sub.add_parser("classify", help="print the interaction regime")
    k.add_argument("config")
    k.set_defaults(fn=cmd_classify)

    f = sub.add_parser("flatten", help="report whether the grid flattens to one sequential run")
    f.add_argument("config")
    f.add_argument("--horizon", type=int)
    f.add_argument("--out-dir")
    f.set_defaults(fn=cmd_flatten)

    e = sub.add_parser("check-eq", help="compare the concurrent and the flattened run")
    e.add_argument("config")
    e.add_argument("--horizon", type=int)
    e.add_argument("--seed", type=int)
    e.add_argument("--input", action="append", metavar="ID=WORD")
    e.set_defaults(fn=cmd_check_eq)

    n = sub.add_parser("enumerate", help="dovetail a machine over its inputs")
    n.add_argument("machine")
    n.add_argument("--budget", type=int, default=64)
    n.add_argument("--out-dir")
    n.set_defaults(fn=cmd_enumerate)

    d = sub.add_parser("diff-traces", help="first differing line of two trace files")
    d.add_argument("a")
    d.add_argument("b")
    d.set_defaults(fn=cmd_diff_traces)
    return p


def main(argv=None) -> int:
    try:
        args = parser().parse_args(argv)
    except SystemExit as exc:
        return PARSE if exc.code else OK
    try:
        return args.fn(args)
    except _Fail as exc:
        print(f"error: {exc.kind}: {exc}", file=sys.stderr)
        return exc.code
    except GridValidationError as exc:
        print(f"error: validation: {exc}", file=sys.stderr)
        return INVALID
    except InvalidMachine as exc:
        print(f"error: validation: {exc}", file=sys.stderr)
        return INVALID


if __name__ == "__main__":
    sys.exit(main())
