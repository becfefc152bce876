"""Command line interface: verify, synthesize, bench, run, serve."""

from __future__ import annotations

import argparse
import json
import signal
import sys
from pathlib import Path

from ..lang import nodes as N
from ..lang import parse, print_program, typecheck
from ..lang.printer import print_expr
from ..interp import ContractViolation, eval_call
from ..solver import Budget, CancelToken
from ..synthesis import Closed, Failed, Partial, splice, synthesize
from ..values import format_value, value_to_expr
from ..verify import verify_function
from .bench import run_benchmarks
from .config import load_config


def _load(path: str):
    src = Path(path).read_text()
    prog, diags = parse(src)
    if prog is None:
        for d in diags:
            print(f"{path}:{d}", file=sys.stderr)
        sys.exit(2)
    tp, tdiags = typecheck(prog)
    if tp is None:
        for d in tdiags:
            print(f"{path}: {d.message}", file=sys.stderr)
        sys.exit(2)
    return tp


def cmd_verify(args) -> int:
    tp = _load(args.file)
    budget = Budget(time_limit=args.timeout)
    names = [args.fun] if args.fun else [
        f.name for f in tp.functions if not isinstance(f.body, N.Choose)]
    any_invalid = False
    for name in names:
        fun = tp.function(name)
        if isinstance(fun.body, N.Choose):
            print(f"{name}: skipped (synthesis hole)")
            continue
        report = verify_function(tp, name, budget)
        parts = []
        for o in report.outcomes:
            label = o.vc.kind
            if o.status == "valid":
                parts.append(f"{label} VALID")
            elif o.status == "invalid":
                cex = {k: format_value(v) for k, v in (o.counterexample or {}).items()}
                parts.append(f"{label} INVALID {cex}")
                any_invalid = True
            else:
                parts.append(f"{label} UNKNOWN ({o.reason})")
        print(f"{name}: " + ", ".join(parts))
    return 1 if any_invalid else 0


def cmd_synthesize(args) -> int:
    tp = _load(args.file)
    config = load_config(args.config)
    cancel = CancelToken()
    if args.anytime:
        signal.signal(signal.SIGINT, lambda *a: cancel.set())
    result = synthesize(tp, args.choose, config, cancel=cancel,
                        budget_seconds=args.budget)
    if isinstance(result, Failed):
        print("synthesis failed: every rule application refuted", file=sys.stderr)
        return 1
    sol = result.solution
    new_tp, src = splice(tp, args.choose, sol)
    print(src)
    if isinstance(result, Partial) and not result.fully_closed:
        print("// synthesis interrupted: the program above still contains choose",
              file=sys.stderr)
    return 0


def cmd_bench(args) -> int:
    config = load_config(args.config)
    only = set(args.only.split(",")) if args.only else None
    report = run_benchmarks(args.corpus, config, report_path=args.report,
                            row_budget=args.budget, only=only)
    for row in report.rows:
        mark = "yes" if row.synthesized else "no "
        proved = "proved" if row.proved else ""
        print(f"{row.name:32} synthesized={mark} size={row.size} "
              f"calls={row.calls} sec={row.seconds:6.1f} {proved} {row.note}")
    return 0


def cmd_run(args) -> int:
    tp = _load(args.file)
    fun = tp.function(args.fun)
    raw = json.loads(args.args)
    values = [_decode_value(tp, v, t) for v, (_, t) in zip(raw, fun.params)]
    out = eval_call(tp, args.fun, values, check_contracts=True)
    if isinstance(out, ContractViolation):
        witness = {k: format_value(v) for k, v in out.witness.items()}
        print(f"contract violation: {out.which} of {out.site} under {witness}",
              file=sys.stderr)
        return 1
    from ..values import Value
    if isinstance(out, Value):
        print(format_value(out))
        return 0
    print(f"evaluation failed: {type(out).__name__}", file=sys.stderr)
    return 1


def _decode_value(tp, raw, ty):
    from ..values import AdtVal, BoolVal, IntVal, TupleVal, mk_set
    if isinstance(ty, N.IntType):
        return IntVal(int(raw))
    if isinstance(ty, N.BoolType):
        return BoolVal(bool(raw))
    if isinstance(ty, N.SetIntType):
        return mk_set(int(x) for x in raw)
    if isinstance(ty, N.TupleType):
        return TupleVal(tuple(_decode_value(tp, x, t)
                              for x, t in zip(raw, ty.elements)))
    if isinstance(ty, N.AdtType):
        ctor = raw[0] if isinstance(raw, list) else raw
        args = raw[1:] if isinstance(raw, list) else []
        _, cdef = tp.ctor_owner(ctor)
        return AdtVal(ctor, tuple(_decode_value(tp, a, ft)
                                  for a, (_, ft) in zip(args, cdef.fields)))
    raise ValueError(f"cannot decode {raw!r} at {ty!r}")


def cmd_serve(args) -> int:
    import uvicorn
    from .api import create_app
    uvicorn.run(create_app(load_config(args.config)), host="127.0.0.1",
                port=args.port, log_level="warning")
    return 0


def main(argv=None) -> int:
    top = argparse.ArgumentParser(prog="synthion")
    top.add_argument("--config", default=None, help="path to synthion.toml")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="check a function's verification conditions")
    p.add_argument("file")
    p.add_argument("--fun", default=None)
    p.add_argument("--timeout", type=float, default=3.0)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("synthesize", help="fill a choose site")
    p.add_argument("file")
    p.add_argument("--choose", required=True, help="site id like split/0")
    p.add_argument("--budget", type=float, default=None)
    p.add_argument("--anytime", action="store_true",
                   help="interrupt with SIGINT to get the current partial program")
    p.set_defaults(fn=cmd_synthesize)

    p = sub.add_parser("bench", help="run the benchmark corpus")
    p.add_argument("corpus")
    p.add_argument("--report", default=None)
    p.add_argument("--budget", type=float, default=None)
    p.add_argument("--only", default=None,
                   help="comma separated row names, e.g. List.Insert")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("run", help="contract-checked evaluation")
    p.add_argument("file")
    p.add_argument("--fun", required=True)
    p.add_argument("--args", required=True, help="JSON argument list")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("serve", help="start the HTTP API")
    p.add_argument("--port", type=int, default=8071)
    p.set_defaults(fn=cmd_serve)

    args = top.parse_args(argv)
    try:
        return args.fn(args)
    except BrokenPipeError:
        return 0
    except Exception as e:
        print(f"internal error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
