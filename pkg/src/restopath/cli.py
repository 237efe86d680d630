"""Command-line front end.

    restopath solve    --scenario case.json [--targets 6,15,17] [--k 8] ...
    restopath evaluate --trace trace.json --scenario case.json
    restopath serve    --port 8080 --data-dir ./data

Exit codes: 0 when at least one valid scheme exists, 2 when the run
finished without any, 1 on errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import evaluation, milp, pathsearch
from .grid import ScenarioError, load_scenario
from .pathsearch import UnreachableTargetError
from .report import build_report, format_table, report_bytes
from .service import _apply_overrides


def _parse_args(argv):
    parser = argparse.ArgumentParser(prog="restopath")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="search and rank energising paths")
    solve.add_argument("--scenario", required=True)
    solve.add_argument("--targets", help="comma-separated bus ids")
    solve.add_argument("--k", type=int, help="number of alternative schemes")
    solve.add_argument("--dmax", type=int, help="radial depth limit")
    solve.add_argument("--k1", type=float, help="reactive reliability factor")
    solve.add_argument("--weights", help="five comma-separated weights")
    solve.add_argument("--lambda", dest="lam", type=float,
                       help="grey distinguishing coefficient")
    solve.add_argument("--no-voltage-check", action="store_true")
    solve.add_argument("--out", help="write the JSON report here")
    solve.add_argument("--dump-lp", help="write the final model in LP text")

    ev = sub.add_parser("evaluate", help="rank a previously exported trace")
    ev.add_argument("--trace", required=True)
    ev.add_argument("--scenario", required=True)
    ev.add_argument("--out")

    srv = sub.add_parser("serve", help="run the HTTP service")
    srv.add_argument("--port", type=int, default=8080)
    srv.add_argument("--data-dir", required=True)
    srv.add_argument("--host", default="127.0.0.1")

    return parser.parse_args(argv)


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 1


def _load(path: str):
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise FileNotFoundError(f"cannot read {path}: {exc.strerror}")


def _overrides(args) -> dict:
    out = {"k": args.k, "dmax": args.dmax, "k1": args.k1, "lambda": args.lam,
           "no_voltage_check": args.no_voltage_check}
    if args.targets:
        out["targets"] = [int(t) for t in args.targets.split(",") if t]
    if args.weights:
        out["weights"] = [float(w) for w in args.weights.split(",") if w]
    return out


def _emit(report, trace, ranking, out_path):
    body = report_bytes(report)
    if out_path:
        with open(out_path, "wb") as fh:
            fh.write(body)
    sys.stdout.write(format_table(trace, ranking))
    return 0 if report["valid_count"] > 0 else 2


def cli_solve(args) -> int:
    try:
        scenario = load_scenario(_load(args.scenario))
        scenario = _apply_overrides(scenario, _overrides(args))
    except FileNotFoundError as exc:
        return _fail(str(exc))
    except ScenarioError as exc:
        return _fail(f"invalid scenario: {exc}")

    def progress(iteration, incumbent, found):
        print(f"scheme {found}: {incumbent:.2f} MVar "
              f"(iteration {iteration})", file=sys.stderr)

    try:
        trace = pathsearch.iterate_schemes(
            scenario, check_voltage=not args.no_voltage_check,
            progress=progress)
    except UnreachableTargetError as exc:
        return _fail(str(exc))
    except ScenarioError as exc:
        return _fail(str(exc))
    if args.dump_lp:
        model = pathsearch.build_path_model(
            pathsearch.transform_islands(scenario))
        with open(args.dump_lp, "w") as fh:
            fh.write(milp.to_lp_text(model.problem))
    ranking = evaluation.rank(trace.schemes, scenario)
    return _emit(build_report(trace, ranking), trace, ranking, args.out)


def cli_evaluate(args) -> int:
    try:
        scenario = load_scenario(_load(args.scenario))
        trace_doc = json.loads(_load(args.trace))
    except FileNotFoundError as exc:
        return _fail(str(exc))
    except ScenarioError as exc:
        return _fail(f"invalid scenario: {exc}")
    except json.JSONDecodeError as exc:
        return _fail(f"invalid trace: line {exc.lineno}: {exc.msg}")
    trace = pathsearch.trace_from_dict(
        trace_doc.get("trace", trace_doc))
    ranking = evaluation.rank(trace.schemes, scenario)
    return _emit(build_report(trace, ranking), trace, ranking, args.out)


def cli_serve(args) -> int:
    from .service import serve

    try:
        serve(args.port, args.data_dir, host=args.host)
    except OSError as exc:
        return _fail(f"cannot bind port {args.port}: {exc.strerror}")
    return 0


def main(argv=None) -> int:
    args = _parse_args(sys.argv[1:] if argv is None else argv)
    handler = {"solve": cli_solve, "evaluate": cli_evaluate,
               "serve": cli_serve}[args.command]
    try:
        return handler(args)
    except Exception as exc:  # last-resort: map to exit 1, never traceback
        return _fail(f"{type(exc).__name__}: {exc}")


if __name__ == "__main__":
    sys.exit(main())
