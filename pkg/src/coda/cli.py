"""Command-line front end: check, query, compile, repl and demo.

Exit codes: 0 success, 1 parse/input error, 2 unsafe rule, 3 program not
stratifiable, 4 query without solutions, 5 demo transcript mismatch.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence, TextIO

from .codegen import lower, print_ir
from .context import Context
from .datalog import (
    DatalogError,
    Diagnostic,
    NotStratifiable,
    ParseErrors,
    Program,
    SafetyErrors,
    format_value,
    parse_atom,
    parse_goal,
    parse_rules,
)

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_SAFETY = 2
EXIT_STRATIFY = 3
EXIT_NO_SOLUTION = 4
EXIT_MISMATCH = 5


def _read_program(files: Sequence[str]) -> Program:
    rules = []
    errors = []
    for f in files:
        try:
            text = Path(f).read_text(encoding="utf-8")
        except OSError as exc:
            raise ParseErrors([_io_diag(f, exc)]) from None
        try:
            rules.extend(parse_rules(text, f))
        except ParseErrors as exc:
            errors.extend(exc.errors)
    if errors:
        raise ParseErrors(errors)
    return Program.from_rules(rules)


def _io_diag(f, exc):
    return Diagnostic(f, 0, 0, exc.strerror or str(exc))


def _load(files: Sequence[str], err: TextIO) -> Context | int:
    try:
        return Context(_read_program(files))
    except ParseErrors as exc:
        for d in exc.errors:
            print(d, file=err)
        return EXIT_PARSE
    except SafetyErrors as exc:
        for line in exc.lines():
            print(line, file=err)
        return EXIT_SAFETY
    except NotStratifiable as exc:
        print(f"error: {exc}", file=err)
        return EXIT_STRATIFY


def format_solution(sub: dict) -> str:
    return " ".join(f"{k}={format_value(v)}" for k, v in sub.items())


def cmd_check(args, out: TextIO, err: TextIO) -> int:
    ctx = _load(args.files, err)
    if isinstance(ctx, int):
        return ctx
    for level, preds in enumerate(ctx.strata.layers()):
        for p in preds:
            print(f"{level}\t{p}/{ctx.arities[p]}", file=out)
    return EXIT_OK


def cmd_query(args, out: TextIO, err: TextIO) -> int:
    ctx = _load(args.files, err)
    if isinstance(ctx, int):
        return ctx
    try:
        goal = parse_goal(args.goal)
        sols = ctx.enumerate(goal)
        found = 0
        for sub in sols:
            print(format_solution(sub), file=out)
            found += 1
            if args.first:
                break
    except ParseErrors as exc:
        for d in exc.errors:
            print(d, file=err)
        return EXIT_PARSE
    except SafetyErrors as exc:
        print(f"error: {exc}", file=err)
        return EXIT_SAFETY
    except DatalogError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_PARSE
    return EXIT_OK if found else EXIT_NO_SOLUTION


def cmd_compile(args, out: TextIO, err: TextIO) -> int:
    ctx = _load(args.files, err)
    if isinstance(ctx, int):
        return ctx
    base = Path(args.out)
    base.parent.mkdir(parents=True, exist_ok=True)
    gen = base.with_name(base.name + ".gen.txt")
    snap = base.with_name(base.name + ".json")
    gen.write_text(print_ir(lower(ctx.program)), encoding="utf-8")
    snap.write_text(ctx.dumps() + "\n", encoding="utf-8")
    print(f"wrote {gen}", file=out)
    print(f"wrote {snap}", file=out)
    return EXIT_OK


REPL_HELP = """\
commands:
  tell <fact>.      add a fact
  retract <fact>.   remove a fact
  ? <goal>.         list solutions (goal variables: ?Name or Name)
  strata            show the stratification
  quit              leave"""


def repl(ctx: Context, inp: TextIO, out: TextIO, prompt: str = "coda> ") -> None:
    interactive = inp.isatty() if hasattr(inp, "isatty") else False
    while True:
        if interactive:
            out.write(prompt)
            out.flush()
        line = inp.readline()
        if not line:
            break
        line = line.strip()
        if not line or line.startswith("%"):
            continue
        cmd, _, rest = line.partition(" ")
        try:
            if cmd in ("quit", "exit"):
                break
            elif cmd == "help":
                print(REPL_HELP, file=out)
            elif cmd == "strata":
                for level, preds in enumerate(ctx.strata.layers()):
                    print(f"{level}\t{' '.join(preds)}", file=out)
            elif cmd in ("tell", "retract"):
                fact = parse_atom(rest.strip())
                changed = getattr(ctx, cmd)(fact)
                print("changed" if changed else "unchanged", file=out)
            elif line.startswith("?"):
                n = 0
                for sub in ctx.enumerate(parse_goal(line[1:].strip())):
                    print(format_solution(sub) or "yes", file=out)
                    n += 1
                if not n:
                    print("no", file=out)
            else:
                print(f"unknown command {cmd!r} (try 'help')", file=out)
        except DatalogError as exc:
            print(f"error: {exc}", file=out)


def cmd_repl(args, out: TextIO, err: TextIO, inp: TextIO | None = None) -> int:
    ctx = _load(args.files, err)
    if isinstance(ctx, int):
        return ctx
    repl(ctx, inp or sys.stdin, out)
    return EXIT_OK


def cmd_demo(args, out: TextIO, err: TextIO) -> int:
    from .ehealth import load_scenario, run_scenario

    try:
        scenario = load_scenario(args.name)
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=err)
        return EXIT_PARSE
    transcript = run_scenario(scenario)
    out.write(transcript)
    if args.verify:
        if transcript != scenario.expected:
            print("transcript differs from golden", file=err)
            return EXIT_MISMATCH
        print("verified: transcript matches golden", file=err)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coda", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="parse and admit context sources")
    p.add_argument("files", nargs="+")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("query", help="list the solutions of a goal")
    p.add_argument("files", nargs="+")
    p.add_argument("-g", "--goal", required=True)
    p.add_argument("--first", action="store_true", help="print only the first solution")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("compile", help="write the loop IR and a JSON snapshot")
    p.add_argument("files", nargs="+")
    p.add_argument("-o", "--out", default="context", help="output path prefix")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("repl", help="interactive tell/retract/query session")
    p.add_argument("files", nargs="*")
    p.set_defaults(func=cmd_repl)

    p = sub.add_parser("demo", help="run a bundled scenario")
    p.add_argument("name", nargs="?", default="ehealth")
    p.add_argument("--verify", action="store_true", help="compare with the golden transcript")
    p.set_defaults(func=cmd_demo)
    return parser


def main(argv: Sequence[str] | None = None, out: TextIO | None = None, err: TextIO | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args, out or sys.stdout, err or sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
