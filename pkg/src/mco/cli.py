"""Command-line interface.

Subcommands: ``opt`` (optimize a task file), ``run`` (emulate one),
``gen`` (produce a random task file), ``arrange`` (order a reference
graph).  Errors in inputs or processing exit with status 2.
"""

from __future__ import annotations

import argparse
import sys

from . import distrib as _distrib
from .errors import McoError
from .gen import GenConfig, generate
from .pipeline import Options, optimize
from .report import render_json, render_text, write_figures
from .taskfile import read_task, write_task
from .vm import execute

__all__ = ["main"]


def _parse_inputs(spec: str) -> list[int]:
    if not spec:
        return []
    return [int(v, 0) for v in spec.split(",")]


def _cmd_opt(args) -> int:
    with open(args.input, "rb") as fh:
        tf = read_task(fh.read())
    opts = Options(
        elim=not args.no_elim,
        distrib=args.distrib,
        macro=args.macro,
        reduce=not args.no_reduce,
        verify=args.verify,
        dump_ir=args.dump_ir,
        seed=args.seed,
    )
    result = optimize(tf, opts)
    with open(args.output, "wb") as fh:
        fh.write(write_task(result.task_out))
    if args.report == "json":
        print(render_json(result))
    else:
        print(render_text(result))
    if args.dump_ir:
        for name, dump in result.ir_dumps.items():
            print(f"--- ir after {name} ---")
            print(dump)
    if args.figures:
        for path in write_figures(result, args.figures):
            print(f"figure: {path}")
    if result.verified is False:
        print("error: optimized output is not equivalent to the input",
              file=sys.stderr)
        return 2
    return 0


def _cmd_run(args) -> int:
    with open(args.input, "rb") as fh:
        tf = read_task(fh.read())
    result = execute(tf, _parse_inputs(args.inputs), args.steps)
    for value in result.outputs:
        print(value)
    print(f"status: {result.status}")
    return 0


def _cmd_gen(args) -> int:
    cfg = GenConfig(
        seed=args.seed,
        subprograms=args.subprograms,
        dead_fraction=args.dead,
        call_density=args.calls,
        data_words=args.data_words,
        repeats=args.repeats,
        loops=not args.no_loops,
        load_addr=args.load,
    )
    tf = generate(cfg)
    with open(args.output, "wb") as fh:
        fh.write(write_task(tf))
    print(f"{args.output}: text={len(tf.text)} data={len(tf.data)} "
          f"relocs={len(tf.relocs)} symbols={len(tf.symbols)}")
    return 0


def _cmd_arrange(args) -> int:
    with open(args.graph, "r", encoding="utf-8") as fh:
        g = _distrib.parse_graph(fh.read())
    if args.brute:
        psi, _ = _distrib.brute_force_arrangement(g, args.threshold)
        how = "exhaustive"
    else:
        psi = _distrib.heuristic_arrangement(g, args.threshold)
        how = "heuristic"
    order = sorted(psi, key=psi.get)
    print("order: " + " ".join(str(v) for v in order))
    print(f"tcf: {_distrib.tcf(g, psi, args.threshold)} "
          f"({how}, threshold {args.threshold})")
    print(f"acf: {_distrib.acf(g, psi)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mco",
                                 description="post-link optimizer for SDM-1 task files")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("opt", help="optimize a task file")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--no-elim", action="store_true",
                   help="skip unreachable-code elimination")
    p.add_argument("--distrib", choices=("off", "s0", "s1", "s0s1"),
                   default="s0s1", help="block placement heuristics to apply")
    p.add_argument("--macro", choices=("off", "value", "length"),
                   default="value", help="macro compression candidate order")
    p.add_argument("--no-reduce", action="store_true",
                   help="skip addressing-mode minimization")
    p.add_argument("--verify", action="store_true",
                   help="emulate input and output and compare output streams")
    p.add_argument("--report", choices=("text", "json"), default="text")
    p.add_argument("--figures", metavar="DIR",
                   help="also render report charts into DIR")
    p.add_argument("--dump-ir", action="store_true")
    p.add_argument("--seed", type=int, default=0,
                   help="seed for verification input vectors")
    p.set_defaults(fn=_cmd_opt)

    p = sub.add_parser("run", help="emulate a task file")
    p.add_argument("input")
    p.add_argument("--in", dest="inputs", default="",
                   help="comma-separated input words")
    p.add_argument("--steps", type=int, default=200_000)
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("gen", help="generate a random task file")
    p.add_argument("output")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--subprograms", type=int, default=4)
    p.add_argument("--dead", type=float, default=0.2,
                   help="fraction of subprograms left unreferenced")
    p.add_argument("--calls", type=float, default=0.6)
    p.add_argument("--data-words", type=int, default=8)
    p.add_argument("--repeats", type=int, default=0,
                   help="extra copies of a shared instruction run")
    p.add_argument("--no-loops", action="store_true")
    p.add_argument("--load", type=lambda v: int(v, 0), default=0x1000)
    p.set_defaults(fn=_cmd_gen)

    p = sub.add_parser("arrange", help="order a reference graph")
    p.add_argument("graph",
                   help="graph file: 'v ID SIZE' and \"e SRC DST s s' t t'\" lines")
    p.add_argument("--threshold", type=int, default=130,
                   help="span above which a reference counts as costly")
    p.add_argument("--brute", action="store_true",
                   help="try every order instead of the heuristic")
    p.set_defaults(fn=_cmd_arrange)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (McoError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
