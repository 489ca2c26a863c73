"""Command line front door: load a model file, run it, print the outcome.

    smm run MODEL.smm [--runnables rtc|conc] [--scheduler rr|prio]
                      [--dispatch single] [--medium reliable]
                      [--max-steps N] [--trace] [--format text|structured]
                      [--out FILE]

Flags override the model file's config block. Exit codes: 0 when the run
drains completely, 2 when it blocks on unanswerable calls, 3 when the step
limit cuts it off, 4 for model validation errors, 5 for model-level runtime
errors, 64 for usage errors.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ExecError, ModelError
from .frontend import (
    TraceRecord, build_config, load_model, render_final_state, render_trace,
    trace_recorder,
)
from .vm import AllDone, Blocked, StepLimit, run_main

EXIT_OK = 0
EXIT_BLOCKED = 2
EXIT_STEP_LIMIT = 3
EXIT_VALIDATION = 4
EXIT_RUNTIME = 5
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems must exit 64, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="smm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="simulate a model file")
    run.add_argument("file", help="model source (.smm)")
    run.add_argument("--runnables", choices=["rtc", "conc"])
    run.add_argument("--scheduler", choices=["rr", "prio"])
    run.add_argument("--dispatch", choices=["single"])
    run.add_argument("--medium", choices=["reliable"])
    run.add_argument("--max-steps", type=int, metavar="N")
    run.add_argument("--trace", action="store_true",
                     help="print one line per executed step")
    run.add_argument("--format", choices=["text", "structured"], default="text")
    run.add_argument("--out", metavar="FILE",
                     help="write the final state here instead of stdout")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE

    try:
        model = load_model(args.file)
    except OSError as err:
        print(f"smm: cannot read {args.file}: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except ModelError as err:
        for diag in err.diagnostics:
            print(f"{args.file}:{diag}", file=sys.stderr)
        return EXIT_VALIDATION

    try:
        cfg = build_config(model, runnables=args.runnables,
                           scheduler=args.scheduler, dispatch=args.dispatch,
                           medium=args.medium)
    except (ModelError, ExecError) as err:
        print(f"smm: {err}", file=sys.stderr)
        return EXIT_VALIDATION

    records: list[TraceRecord] = []
    hook = trace_recorder(records) if args.trace else None
    try:
        result = run_main(cfg, model.setup, max_steps=args.max_steps,
                          on_step=hook)
    except ModelError as err:
        for diag in err.diagnostics:
            print(f"{args.file}:{diag}", file=sys.stderr)
        return EXIT_VALIDATION
    except ExecError as err:
        if args.trace and records:
            print(render_trace(records))
        print(f"smm: runtime error: {err}", file=sys.stderr)
        return EXIT_RUNTIME

    if args.trace and records:
        print(render_trace(records))
    rendering = render_final_state(result, args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(rendering + "\n")
    else:
        print(rendering)

    if isinstance(result.halt, Blocked):
        stuck = ", ".join(f"(oid {o}, tid {t})" for o, t in result.halt.waiting)
        print(f"smm: blocked; waiting threads: {stuck}", file=sys.stderr)
        return EXIT_BLOCKED
    if isinstance(result.halt, StepLimit):
        print("smm: step limit reached", file=sys.stderr)
        return EXIT_STEP_LIMIT
    assert isinstance(result.halt, AllDone)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
