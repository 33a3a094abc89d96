"""Command line front end.

Exit codes: 0 SAFE (or success), 1 UNSAFE (or a negative answer), 2
UNKNOWN, 64 usage error, 65 bad scenario, 70 internal error.  Options
fall back to ``DRYREACH_<OPTION>`` environment variables, then to the
scenario file.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .artifacts import emit_plot, write_report, write_tube_csv, write_witness_csv
from .discrepancy import learn_global_discrepancy, learn_piecewise_discrepancy, validate_discrepancy
from .errors import DryReachError, ScenarioError
from .graph import check_forward_simulation
from .reach import graph_reach
from .reasoning import certify_reach_containment, certify_unbounded_composition, decompose_reach
from .scenario import Scenario, load_mode_map, load_scenario
from .sim import SimTrace, simulate, simulate_many, time_grid
from .verify import SAFE, UNKNOWN, UNSAFE, VerdictReport, verify_safety

log = logging.getLogger("dryreach")

EXIT = {SAFE: 0, UNSAFE: 1, UNKNOWN: 2}
EX_USAGE, EX_DATAERR, EX_SOFTWARE = 64, 65, 70
SCENARIO_DIR = Path(__file__).parent / "scenarios"
ENV_PREFIX = "DRYREACH_"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def resolve_scenario(name: str) -> Path:
    """A path as given, or the name of a shipped scenario."""
    p = Path(name)
    if p.exists():
        return p
    for cand in (SCENARIO_DIR / name, SCENARIO_DIR / f"{name}.toml"):
        if cand.exists():
            return cand
    raise ScenarioError(f"no scenario file {name!r}")


def _env(name: str, cast):
    raw = os.environ.get(ENV_PREFIX + name.upper())
    if raw is None or raw == "":
        return None
    try:
        return cast(raw)
    except ValueError:
        raise UsageError(f"{ENV_PREFIX}{name.upper()}={raw!r} is not a valid value") from None


def _opt(args, name: str, cast):
    val = getattr(args, name, None)
    return val if val is not None else _env(name, cast)


def _load(args, name: str) -> Scenario:
    sc = load_scenario(resolve_scenario(name))
    return sc.with_overrides(
        seed=_opt(args, "seed", int),
        grid=_opt(args, "grid", float),
        max_refine=_opt(args, "max_refine", int),
        terminal_dwell=_opt(args, "terminal_dwell", float),
    )


def _outdir(args, sc_name: str) -> Path:
    out = Path(_opt(args, "out", str) or "dryreach-out") / sc_name
    out.mkdir(parents=True, exist_ok=True)
    return out


def _plots(out: Path, sc: Scenario, results, graphs, witness=None) -> list[Path]:
    paths = []
    for dx, dy in sc.plot_dims:
        paths.append(emit_plot(out / f"plot_{dx}_{dy}.svg", results, graphs, sc.variables, (dx, dy), witness))
    return paths


def verify_scenario(sc: Scenario, out: Path) -> tuple[dict, list[Path], VerdictReport]:
    """Run the verifier on ``sc`` and write its artifacts to ``out``."""
    rep = verify_safety(sc.system, sc.unsafe, sc.budget, sc.reach, sc.falsify_samples, sc.partition)
    n = len(sc.variables)
    files = []
    if rep.results:
        # every result shares the original vertex numbering
        files.append(write_tube_csv(out / "tubes.csv", rep.results, lambda i: sc.system.graph, n))
    if rep.witness is not None:
        files.append(write_witness_csv(out / "witness.csv", rep.witness, n))
    files += _plots(out, sc, rep.results, [sc.system.graph] * len(rep.results), rep.witness)
    stats = {k: v for k, v in rep.stats.items() if k != "wall_time"}
    data = {"scenario": sc.name, "verdict": rep.verdict, "reason": rep.reason, "stats": stats}
    if rep.trace is not None:
        data["witness_trace"] = list(rep.trace)
        data["witness_x0"] = [float(v) for v in rep.witness.x0]
    files.append(write_report(out / "report.json", data))
    data["wall_time"] = rep.stats.get("wall_time")
    return data, files, rep


# -- subcommands -------------------------------------------------------------

def cmd_verify(args) -> int:
    sc = _load(args, args.scenario)
    data, files, _ = verify_scenario(sc, _outdir(args, sc.name))
    print(f"{sc.name}: {data['verdict']}" + (f" ({data['reason']})" if data["reason"] else ""))
    for k, v in sorted(data["stats"].items()):
        print(f"  {k}: {v}")
    print(f"  wall_time: {data['wall_time']}")
    if "witness_trace" in data:
        print(f"  witness: {data['witness_trace']}")
    for f in files:
        print(f"  wrote {f}")
    return EXIT[data["verdict"]]


def cmd_reach(args) -> int:
    sc = _load(args, args.scenario)
    out = _outdir(args, sc.name)
    rs = graph_reach(sc.system, sc.reach)
    files = [write_tube_csv(out / "tubes.csv", [rs], lambda i: sc.system.graph, len(sc.variables))]
    files += _plots(out, sc, [rs], [sc.system.graph])
    print(f"{sc.name}: {len(rs.tubes)} tubes")
    for f in files:
        print(f"  wrote {f}")
    return 0


def _mode_traces(sc: Scenario, mode: str, count: int, rng, horizon: float):
    times = time_grid(horizon, sc.reach.grid)
    states = simulate_many(sc.system.simulator, mode, sc.system.theta.sample(rng, count), times)
    return [SimTrace(mode, times, states[:, j]) for j in range(count)]


def cmd_learn(args) -> int:
    sc = _load(args, args.scenario)
    g = sc.system.graph
    mode = args.mode or g.labels[g.initial[0]]
    if not sc.system.simulator.has_mode(mode):
        raise ScenarioError(f"simulator has no mode {mode!r}")
    horizon = args.horizon or max(
        (sc.system.dwell(v) for v in range(g.n_vertices) if g.labels[v] == mode), default=None
    )
    if horizon is None:
        raise UsageError("mode does not label a vertex; pass --horizon")
    rng = np.random.default_rng(sc.reach.seed)
    train = _mode_traces(sc, mode, sc.reach.n_train, rng, horizon)
    test = _mode_traces(sc, mode, args.test, rng, horizon)
    kind = (args.type or sc.reach.kind).upper()
    if kind == "PED":
        fn = learn_piecewise_discrepancy(train, horizon, sc.reach.gamma_cap)
    else:
        fn = learn_global_discrepancy(train, horizon)
    frac = validate_discrepancy(fn, test)
    d = fn.describe()
    print(f"mode {mode} horizon {horizon} type {d['type']}")
    print(f"  K: {d['K']:.6g}")
    if "gamma" in d:
        print(f"  gamma: {d['gamma']:.6g}")
    else:
        print(f"  breakpoints: {[round(b, 6) for b in d['breakpoints']]}")
        print(f"  gammas: {[round(x, 6) for x in d['gammas']]}")
    print(f"  validation: {frac:.6f} on {args.test} fresh traces")
    return 0


def cmd_simulate(args) -> int:
    sc = _load(args, args.scenario)
    g = sc.system.graph
    mode = args.mode or g.labels[g.initial[0]]
    x0 = sc.system.theta.center if args.x0 is None else np.array([float(v) for v in args.x0.split(",")])
    duration = args.duration or sc.system.dwell(g.initial[0])
    tr = simulate(sc.system.simulator, mode, x0, time_grid(duration, sc.reach.grid))
    print(",".join(["t"] + list(sc.variables)))
    for t, x in zip(tr.times, tr.states):
        print(",".join([repr(float(t))] + [repr(float(v)) for v in x]))
    return 0


def cmd_checksim(args) -> int:
    a, b = _load(args, args.first), _load(args, args.second)
    lmap = load_mode_map(args.lmap) if args.lmap else None
    rel = check_forward_simulation(a.system.graph, b.system.graph, lmap)
    if rel is None:
        print("NOT SIMULATED")
        return 1
    ga, gb = a.system.graph, b.system.graph
    print(f"relation ({len(rel)} pairs, {rel.iterations} rounds):")
    for v, u in rel:
        print(f"  {ga.names[v]} -> {gb.names[u]}")
    return 0


def _print_certificate(data: dict) -> None:
    print(f"{data['kind']}: {'CERTIFIED' if data['ok'] else 'NOT CERTIFIED'}"
          + (f" ({data['reason']})" if data.get("reason") else ""))
    for p in data["premises"]:
        print(f"  [{'ok' if p['holds'] else 'FAIL'}] {p['name']}" + (f": {p['detail']}" if p.get("detail") else ""))


def cmd_certify(args) -> int:
    if args.what == "contain":
        if len(args.scenarios) != 2:
            raise UsageError("certify contain needs two scenarios")
        a, b = (_load(args, s) for s in args.scenarios)
        lmap = load_mode_map(args.lmap) if args.lmap else None
        data = certify_reach_containment(a.system, b.system, lmap).to_dict()
        name = f"{a.name}_in_{b.name}"
    else:
        if len(args.scenarios) != 1:
            raise UsageError(f"certify {args.what} needs one scenario")
        sc = _load(args, args.scenarios[0])
        name = sc.name
        if args.what == "fixpoint":
            cert = certify_unbounded_composition(sc.system, sc.reach)
            data = cert.to_dict()
            data["terminal_box"] = cert.terminal_box.intervals()
        else:
            dec = decompose_reach(sc.system, sc.reach)
            g = sc.system.graph
            data = {
                "kind": "decompose",
                "ok": True,
                "junction": g.names[dec.junction],
                "premises": [{"name": "JunctionSplitsGraph", "holds": True, "detail": g.names[dec.junction]}],
                "second_stage_initial_set": dec.second.theta.intervals(),
                "tubes": [len(dec.first_result.tubes), len(dec.second_result.tubes)],
            }
            out = _outdir(args, sc.name)
            write_tube_csv(out / "tubes_first.csv", [dec.first_result], lambda i: dec.first.graph, len(sc.variables))
            write_tube_csv(out / "tubes_second.csv", [dec.second_result], lambda i: dec.second.graph, len(sc.variables))
    _print_certificate(data)
    path = write_report(_outdir(args, name) / f"certificate_{args.what}.json", data)
    print(f"  wrote {path}")
    return 0 if data["ok"] else 1


def cmd_bench(args) -> int:
    from .bench import format_table, load_suite, run_bench

    suite = load_suite(resolve_scenario(args.suite))
    jobs = _opt(args, "jobs", int) or 1
    out = Path(_opt(args, "out", str) or "dryreach-out")
    overrides = {k: _opt(args, k, cast) for k, cast in
                 (("seed", int), ("grid", float), ("max_refine", int), ("terminal_dwell", float))}
    rows = run_bench(suite, out, jobs, overrides)
    print(format_table(rows))
    return 0 if all(r["match"] for r in rows) else 1


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, help="random seed (env DRYREACH_SEED)")
    common.add_argument("--out", help="artifact directory (env DRYREACH_OUT, default dryreach-out)")
    common.add_argument("--jobs", type=int, help="parallel benchmark entries (env DRYREACH_JOBS)")
    common.add_argument("--grid", type=float, help="sample step in seconds (env DRYREACH_GRID)")
    common.add_argument("--max-refine", type=int, dest="max_refine", help="refinement depth (env DRYREACH_MAX_REFINE)")
    common.add_argument("--terminal-dwell", type=float, dest="terminal_dwell",
                        help="dwell of terminal vertices (env DRYREACH_TERMINAL_DWELL)")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = _Parser(prog="dryreach", description="Simulation-driven safety verification of hybrid systems.")
    p.add_argument("--version", action="version", version=f"dryreach {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("verify", parents=[common], help="verify or falsify a scenario")
    s.add_argument("scenario")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("reach", parents=[common], help="compute reachtubes")
    s.add_argument("scenario")
    s.set_defaults(func=cmd_reach)

    s = sub.add_parser("learn", parents=[common], help="learn and validate a discrepancy for one mode")
    s.add_argument("scenario")
    s.add_argument("--mode")
    s.add_argument("--type", choices=["GED", "PED", "ged", "ped"])
    s.add_argument("--horizon", type=float)
    s.add_argument("--test", type=int, default=100, help="fresh validation traces")
    s.set_defaults(func=cmd_learn)

    s = sub.add_parser("simulate", parents=[common], help="print one simulation as CSV")
    s.add_argument("scenario")
    s.add_argument("--mode")
    s.add_argument("--x0", help="comma separated initial state (default: centre of the initial set)")
    s.add_argument("--duration", type=float)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("checksim", parents=[common], help="forward simulation between two scenario graphs")
    s.add_argument("first")
    s.add_argument("second")
    s.add_argument("--lmap", help="TOML mode map file")
    s.set_defaults(func=cmd_checksim)

    s = sub.add_parser("certify", parents=[common], help="containment, fixpoint or decomposition certificates")
    s.add_argument("what", choices=["contain", "fixpoint", "decompose"])
    s.add_argument("scenarios", nargs="+")
    s.add_argument("--lmap", help="TOML mode map file")
    s.set_defaults(func=cmd_certify)

    s = sub.add_parser("bench", parents=[common], help="run a benchmark suite")
    s.add_argument("suite", nargs="?", default="suite.toml")
    s.set_defaults(func=cmd_bench)
    return p


def run_cli(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"dryreach: usage error: {exc}", file=sys.stderr)
        return EX_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"dryreach: usage error: {exc}", file=sys.stderr)
        return EX_USAGE
    except (ScenarioError, DryReachError, OSError) as exc:
        print(f"dryreach: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EX_DATAERR
    except Exception as exc:  # pragma: no cover - reported, not hidden
        log.debug("internal error", exc_info=True)
        print(f"dryreach: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EX_SOFTWARE


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
