"""Command-line front end: analyze networks, compare eliminator models,
replay scenario trajectories, and verify simulated delays against bounds.

Exit codes: 0 all good, 1 input error, 2 at least one deadline violated,
an unbounded verdict, or a non-converged analysis.  Input paths prefixed
with ``bundled:`` resolve into the corpus shipped inside the package.
"""

import argparse
import json
import sys
from importlib import resources

from .minplus import is_unbounded, parse_rational, rational_str
from .sim import ScenarioError, load_scenario, run_scenario
from .tfa import CONVERGED, MODEL_INTUITIVE, MODEL_TIGHT, analyze, compare_models
from .topology import SpecError, load_network

BUNDLED_PREFIX = "bundled:"


def bundled_dir():
    return resources.files("redcalc").joinpath("data")


def bundled_names() -> list:
    return sorted(p.name for p in bundled_dir().iterdir() if p.name.endswith(".json"))


def resolve_input(path: str):
    if path.startswith(BUNDLED_PREFIX):
        return bundled_dir().joinpath(path[len(BUNDLED_PREFIX):])
    return path


def _load_network(path):
    target = resolve_input(path)
    if hasattr(target, "open"):
        with target.open("r", encoding="utf-8") as fh:
            return load_network(fh)
    return load_network(target)


def _load_scenario(path):
    target = resolve_input(path)
    if hasattr(target, "open"):
        with target.open("r", encoding="utf-8") as fh:
            return load_scenario(fh)
    return load_scenario(target)


def _emit(text: str, out_path):
    if out_path is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _report_exit(report) -> int:
    if report.status != CONVERGED or report.any_violation():
        return 2
    return 0


def _caps(args) -> dict:
    cap = args.burst_cap
    return {
        "iter_cap": args.iter_cap,
        "burst_cap": parse_rational(cap) if isinstance(cap, str) else cap,
    }


def cmd_analyze(args) -> int:
    network = _load_network(args.input)
    report = analyze(network, model=args.model, lossless=args.lossless, **_caps(args))
    if args.format == "csv":
        _emit(report.to_csv(), args.out)
    else:
        _emit(json.dumps(report.to_json(), indent=2), args.out)
    return _report_exit(report)


def cmd_compare(args) -> int:
    network = _load_network(args.input)
    out = compare_models(network, lossless=args.lossless, **_caps(args))
    doc = {
        "tight": out["tight"].to_json(),
        "intuitive": out["intuitive"].to_json(),
        "pairs": [
            {
                "flow": fid,
                "destination": dest,
                "tight": t.to_json(),
                "intuitive": i.to_json(),
            }
            for (fid, dest), (t, i) in sorted(out["pairs"].items())
        ],
    }
    _emit(json.dumps(doc, indent=2), args.out)
    return max(_report_exit(out["tight"]), _report_exit(out["intuitive"]))


def cmd_simulate(args) -> int:
    scenario = _load_scenario(args.scenario)
    trace = run_scenario(scenario)
    _emit(trace.to_csv(), args.trace_out)
    return 0


def cmd_verify(args) -> int:
    scenario = _load_scenario(args.scenario)
    network = _load_network(args.network)
    report = analyze(network, model=args.model, lossless=args.lossless, **_caps(args))
    trace = run_scenario(scenario)
    delays = trace.delays()

    per_flow = {}
    for (fid, _unit), delay in delays.items():
        lo, hi = per_flow.get(fid, (delay, delay))
        per_flow[fid] = (min(lo, delay), max(hi, delay))

    rows = []
    ok_all = True
    for fid in sorted(per_flow):
        results = [r for r in report.results if r.flow == fid]
        if not results:
            raise SpecError("flows", f"scenario flow {fid!r} is not in the network")
        interval = results[0].interval
        for r in results[1:]:
            interval = interval.hull(r.interval)
        observed_lo, observed_hi = per_flow[fid]
        ok = observed_lo >= interval.lo and (
            is_unbounded(interval.hi) or observed_hi <= interval.hi
        )
        notes = []
        if is_unbounded(interval.hi):
            notes.append("no finite upper bound; divergence scenario confirmed by trace")
        elif observed_hi == interval.hi:
            notes.append("bound attained")
        if len(results) > 1:
            notes.append("interval is the hull over destinations")
        ok_all &= ok
        rows.append(
            {
                "flow": fid,
                "observed": {
                    "min": rational_str(observed_lo),
                    "max": rational_str(observed_hi),
                },
                "bound": interval.to_json(),
                "ok": ok,
                "notes": notes,
            }
        )
    doc = {
        "scenario": scenario.name,
        "model": report.model,
        "lossless": report.lossless,
        "lost_units": [f"{fid}/{unit}" for fid, unit in trace.lost_units()],
        "flows": rows,
        "sound": ok_all,
    }
    _emit(json.dumps(doc, indent=2), args.out)
    return 0 if ok_all else 2


def _add_analysis_flags(p):
    p.add_argument(
        "--model",
        choices=[MODEL_TIGHT, MODEL_INTUITIVE],
        default=MODEL_TIGHT,
        help="eliminator output-curve model (default: tight)",
    )
    p.add_argument(
        "--lossless",
        action="store_true",
        help="assume no data unit is ever lost on the analyzed paths",
    )
    p.add_argument("--iter-cap", type=int, default=None, help="fixed-point sweep cap")
    p.add_argument("--burst-cap", default=None, help="burst divergence cap (rational)")
    p.add_argument("--out", default=None, help="output file (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="redcalc",
        description="Worst-case delay analysis and trajectory simulation for "
        "networks with packet replication, elimination, re-sequencing, and "
        "shaping.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="compute per-destination delay intervals")
    p.add_argument("--in", dest="input", required=True, help="network file (JSON)")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    _add_analysis_flags(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("compare", help="run both eliminator models and pair the bounds")
    p.add_argument("--in", dest="input", required=True, help="network file (JSON)")
    _add_analysis_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("simulate", help="replay a scenario and emit the trace as CSV")
    p.add_argument("--scenario", required=True, help="scenario file (JSON)")
    p.add_argument("--trace-out", default=None, help="trace CSV file (default: stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="check simulated delays against analyzed bounds")
    p.add_argument("--scenario", required=True, help="scenario file (JSON)")
    p.add_argument("--network", required=True, help="network file (JSON)")
    _add_analysis_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bundled", help="list the scenario/network corpus in the package")
    p.set_defaults(func=lambda args: (_emit("\n".join(bundled_names()), None), 0)[1])

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SpecError, ScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
