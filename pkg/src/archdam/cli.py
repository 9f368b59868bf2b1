"""Command-line entry point.

Exit codes: 0 success, 1 configuration or input error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import geometry, harness, mtdm
from .mocss import CssParams, optimize
from .modal import DEFAULT_DIVISIONS, MeshError, ModelingError, modal_analysis
from .nsga2 import Nsga2Params, nsga2_optimize
from .pareto import hypervolume_2d, pareto_rank
from .problems import synthetic_problem

OK, CONFIG_ERROR, RUNTIME_ERROR = 0, 1, 2

# Morrow Point first frequencies (Hz) and accepted relative deviations
MODAL_REFERENCE = {"empty": (4.2897, 0.15), "full": (2.9607, 0.20)}


def cmd_run(args) -> int:
    config = harness.RunConfig.load(args.config)
    if args.output:
        config.output_dir = args.output
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    scenarios = mtdm.load_scenarios(config.scenarios) if config.scenarios else None
    records = harness.run_experiment(config, check_invariants=args.check_invariants, workers=args.workers)
    for rec in records:
        stem = out / f"{config.method}_{config.problem}_seed{rec.seed}"
        rec.save(stem.with_suffix(".json"))
        harness.export_record(rec, stem.with_suffix(".csv"))
        harness.plot_record(rec, stem.with_suffix(".svg"))
        n_feasible = int(rec.archive.feasible.sum())
        print(f"seed {rec.seed}: {len(rec.archive)} members ({n_feasible} feasible), {rec.wall_time:.1f} s -> {stem}.csv")
    best = harness.best_run(records)
    print(f"best run by hypervolume: seed {best.seed}")
    if scenarios:
        _print_rankings(best.archive.F, scenarios, top=args.top)
    return OK


def _print_rankings(F, scenarios, top: int = 5) -> None:
    if len(F) < 2:
        print("fewer than two members; nothing to rank")
        return
    for sc in scenarios:
        ranked = mtdm.global_rank(F, sc)
        print(f"scenario {sc.name} weights {list(sc.weights)}")
        for r in ranked[:top]:
            print(f"  #{r.position:<3d} member {r.index:<4d} R={r.global_score:.4f} fit={np.array2string(F[r.index], precision=5)}")


def cmd_verify_modal(args) -> int:
    shape = geometry.make_shape(geometry.morrow_point_design().to_array())
    ok = True
    for reservoir, (target, tol) in MODAL_REFERENCE.items():
        start = time.perf_counter()
        res = modal_analysis(shape, tuple(args.divisions), reservoir=reservoir, n_modes=args.modes)
        elapsed = time.perf_counter() - start
        f1 = float(res.frequencies[0])
        dev = f1 / target - 1.0
        passed = abs(dev) <= tol and res.converged
        ok &= passed
        print(f"{reservoir:5s} reservoir: fr1 = {f1:.4f} Hz, reference {target} Hz, deviation {dev:+.1%} "
              f"(limit {tol:.0%}) {'PASS' if passed else 'FAIL'} [{elapsed:.1f} s]")
        print("  modes: " + " ".join(f"{f:.4f}" for f in res.frequencies))
    return OK if ok else RUNTIME_ERROR


def cmd_rank(args) -> int:
    table = harness.import_archive(args.archive)
    if args.scenarios == "default":
        scenarios = list(mtdm.DEFAULT_SCENARIOS)
    else:
        scenarios = mtdm.load_scenarios(args.scenarios)
    F = table.archive.F[table.archive.feasible]
    _print_rankings(F, scenarios, top=args.top)
    return OK


def cmd_plot(args) -> int:
    table = harness.import_archive(args.archive)
    out = args.output or str(Path(args.archive).with_suffix(".svg"))
    n = harness.emit_plot(table.archive.F, out, pareto_rank(table.archive.F, table.archive.violation))
    print(f"{n} markers -> {out}")
    return OK


def cmd_bench(args) -> int:
    problem = synthetic_problem(args.problem)
    rows = []
    for seed in range(args.seeds):
        t0 = time.perf_counter()
        css = optimize(problem, CssParams(n_agents=args.agents, iterations=args.iterations), seed=seed)
        t1 = time.perf_counter()
        ga = nsga2_optimize(problem, Nsga2Params(population_size=args.agents, generations=args.iterations), seed=seed)
        t2 = time.perf_counter()
        rows.append((hypervolume_2d(css.F), hypervolume_2d(ga.F), t1 - t0, t2 - t1))
        print(f"seed {seed}: MoCSS HV {rows[-1][0]:.4f} ({len(css)} members, {rows[-1][2]:.1f} s)   "
              f"NSGA-II HV {rows[-1][1]:.4f} ({len(ga)} members, {rows[-1][3]:.1f} s)")
    hv = np.array(rows)
    ratio = np.median(hv[:, 0]) / np.median(hv[:, 1]) if np.median(hv[:, 1]) > 0 else float("nan")
    print(f"median HV: MoCSS {np.median(hv[:, 0]):.4f}, NSGA-II {np.median(hv[:, 1]):.4f}, ratio {ratio:.3f}")
    return OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="archdam", description="Arch-dam shape optimisation toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment from a JSON config")
    p.add_argument("config")
    p.add_argument("-o", "--output", help="override the output directory")
    p.add_argument("--workers", type=int, default=None, help="evaluation threads")
    p.add_argument("--check-invariants", action="store_true")
    p.add_argument("--top", type=int, default=5)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify-modal", help="first frequencies of the Morrow Point baseline")
    p.add_argument("--divisions", type=int, nargs=3, default=list(DEFAULT_DIVISIONS), metavar=("ARCH", "HEIGHT", "THICK"))
    p.add_argument("--modes", type=int, default=5)
    p.set_defaults(func=cmd_verify_modal)

    p = sub.add_parser("rank", help="tournament ranking of an exported archive")
    p.add_argument("archive")
    p.add_argument("scenarios", help="JSON scenario file, or 'default'")
    p.add_argument("--top", type=int, default=5)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("plot", help="SVG scatter of an exported archive")
    p.add_argument("archive")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("bench", help="MoCSS versus NSGA-II on a synthetic problem")
    p.add_argument("problem", help="zdt1 or sphere")
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--agents", type=int, default=100)
    p.add_argument("--iterations", type=int, default=200)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (MeshError, ModelingError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR
    except (ValueError, FileNotFoundError, KeyError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CONFIG_ERROR
    except (OSError, RuntimeError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
