"""Command line entry point: ``staticalloc <command> [options]``."""
from __future__ import annotations

import argparse
import csv
import io as _io
import json
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import datasets, harness
from .algograph import lift_to_semilattice
from .architecture import BatchStats, RobotPartition, nonisomorphic_batch
from .errors import AllocationError, ConfigError, Infeasible, InfeasibleMemoryPlacement
from .io import architecture_to_dict, load_architecture, read_json
from .memmodel import balance_restricted, bin_loads, equivalent_optima, variance
from .solver import SolverConfig, enumerate_oracle, solve, solve_baseline_li2018
from .instances import random_instance

EXIT_OK, EXIT_FAIL, EXIT_INFEASIBLE, EXIT_CONFIG = 0, 1, 2, 3


def _emit(obj, fmt: str, out: Optional[str]):
    if fmt == "json":
        text = json.dumps(obj, indent=2) + "\n"
    else:
        rows = obj if isinstance(obj, list) else [obj]
        buf = _io.StringIO()
        keys = list(rows[0]) if rows else []
        w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: json.dumps(v) if isinstance(v, (dict, list)) else v for k, v in r.items()})
        text = buf.getvalue()
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _config(path: Optional[str]) -> dict:
    return read_json(path) if path else {}


def _instance(args):
    ds = datasets.load_dataset(args.dataset)
    g = lift_to_semilattice(ds.graph)
    if args.arch:
        a = load_architecture(args.arch)
    else:
        a = datasets.chain_architecture(args.robots, ds.link_table)
    return g, a, ds.profile()


def cmd_solve(args, memory_weight=None) -> int:
    cfg_dict = _config(args.config)
    if memory_weight is not None:
        cfg_dict["memory_weight"] = memory_weight
    cfg = SolverConfig.from_dict(cfg_dict)
    g, a, profile = _instance(args)
    fn = {"ours": solve, "baseline": solve_baseline_li2018, "oracle": enumerate_oracle}[args.method]
    res = fn(g, a, profile, cfg)
    summary = res.summary(g, a)
    if args.no_time:
        summary.pop("wall_time_s")
    _emit(summary, args.format, args.out)
    return EXIT_OK


def cmd_time_only(args) -> int:
    return cmd_solve(args, memory_weight=0.0)


def cmd_balance_mem(args) -> int:
    inst = datasets.memory_instance_from_dict(read_json(args.instance)) if args.instance else datasets.memory_example()
    robots = range(len(inst.robots))
    part = RobotPartition(tr0=inst.tr0, tr_inf=frozenset(robots) - inst.tr0)
    res = balance_restricted(inst.profile(), part, inst.restricted, inst.unrestricted, args.method)
    loads = [res.loads[r] for r in robots]
    out = {
        "max_load": max(loads),
        "variance": variance(loads),
        "loads": {inst.robots[r]: res.loads[r] for r in robots},
        "assignment": {inst.robots[r]: [inst.name_of(i) for i in sorted(res.assignment) if res.assignment[i] == r]
                       for r in robots},
    }
    if args.optima:
        priors = [res.stage1_loads[r] for r in robots]
        vals = [inst.value_of(i) for i in sorted(inst.unrestricted)]
        multisets = {tuple(sorted(bin_loads(vals, opt, len(priors), priors))) for opt in equivalent_optima(vals, len(priors), priors)}
        out["equivalent_load_multisets"] = [list(m) for m in sorted(multisets)]
    _emit(out, args.format, args.out)
    return EXIT_OK


def _sweep_cfg(args) -> harness.SweepConfig:
    d = _config(args.config)
    if args.seed is not None:
        d["seed"] = args.seed
    if args.n:
        d["n_range"] = args.n
    if args.reps is not None:
        d["reps_per_arch"] = args.reps
    if args.archs is not None:
        d["archs_per_n"] = args.archs
    if args.record_time:
        d["record_time"] = True
    d.setdefault("dataset", args.dataset)
    return harness.SweepConfig.from_dict(d)


def cmd_sweep(args) -> int:
    cfg = _sweep_cfg(args)
    report = harness.run_sweep(cfg)
    if args.out:
        harness.emit_tables(report.rows, args.format, args.out)
    else:
        sys.stdout.write(harness.format_tables(report.rows, args.format))
    for f in report.failures:
        print(f"failed: n={f['n']} arch={f['arch']}: {f['error']}", file=sys.stderr)
    return EXIT_OK


def cmd_scalability(args) -> int:
    d = _config(args.config)
    if args.seed is not None:
        d["seed"] = args.seed
    cfg = harness.ScalabilityConfig.from_dict(d)
    report = harness.run_scalability(cfg)
    reg = report.regression
    out = {
        "points": [vars(p) for p in report.points],
        "regression": None if reg is None else {"coef": list(reg.coef), "r2": reg.r2, "p_value": reg.p_value,
                                                "n_points": reg.n_points},
    }
    if args.format == "csv":
        _emit([vars(p) for p in report.points], "csv", args.out)
        if reg is not None:
            print(f"r2={reg.r2:.4f} p={reg.p_value:.3g}", file=sys.stderr)
    else:
        _emit(out, "json", args.out)
    return EXIT_OK


def cmd_gen_arch(args) -> int:
    table = datasets.load_dataset(args.dataset).link_table
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    stats = BatchStats()
    batch = nonisomorphic_batch(args.robots, rng, table, size=args.count, stats=stats)
    docs = [architecture_to_dict(a) for a in batch]
    _emit(docs[0] if args.count == 1 else docs, "json", args.out)
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    cfg = SolverConfig.from_dict(_config(args.config))
    rows, worst = [], 0.0
    for i in range(args.instances):
        inst = random_instance(rng, args.max_algorithms, args.max_nodes)
        try:
            ours = solve(inst.graph, inst.arch, inst.profile, cfg).distance
            ref = enumerate_oracle(inst.graph, inst.arch, inst.profile, cfg).distance
        except Infeasible:
            rows.append({"instance": i, "solve": None, "oracle": None, "gap": None})
            continue
        worst = max(worst, abs(ours - ref))
        rows.append({"instance": i, "solve": ours, "oracle": ref, "gap": abs(ours - ref)})
    _emit(rows, args.format, args.out)
    ok = worst <= args.tol
    print(f"max gap {worst:.3e} ({'ok' if ok else 'MISMATCH'})", file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="staticalloc", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, fmt_default="json"):
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--format", choices=("csv", "json"), default=fmt_default)
        sp.add_argument("--out", help="output path (default stdout)")
        sp.add_argument("--dataset", default=datasets.PAPER, help="'paper' or a directory")

    for name, fn, help_ in (("solve", cmd_solve, "joint time-memory optimum for one instance"),
                            ("time-only", cmd_time_only, "time-only optimum (memory weight 0)")):
        sp = sub.add_parser(name, help=help_)
        common(sp)
        sp.add_argument("--arch", help="architecture JSON (default: robots linked to one fog)")
        sp.add_argument("--robots", type=int, default=1)
        sp.add_argument("--method", choices=("ours", "baseline", "oracle"), default="ours")
        sp.add_argument("--no-time", action="store_true", help="omit wall time from the output")
        sp.set_defaults(func=fn)

    sp = sub.add_parser("balance-mem", help="memory-only balancing over robots")
    common(sp)
    sp.add_argument("--instance", help="memory instance JSON (default: bundled 13-item instance)")
    sp.add_argument("--method", choices=("auto", "exact", "lpt"), default="exact")
    sp.add_argument("--optima", action="store_true", help="also list every optimal load multiset")
    sp.set_defaults(func=cmd_balance_mem)

    sp = sub.add_parser("sweep", help="random-architecture comparison against the baseline")
    common(sp, "csv")
    sp.add_argument("--n", type=int, nargs="+", help="robot counts")
    sp.add_argument("--reps", type=int)
    sp.add_argument("--archs", type=int, help="architectures per robot count (default n+5)")
    sp.add_argument("--record-time", action="store_true", help="fill the time column (not reproducible)")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("scalability", help="solve time over a grid with a log-log fit")
    common(sp)
    sp.set_defaults(func=cmd_scalability)

    sp = sub.add_parser("gen-arch", help="random non-isomorphic architectures")
    common(sp)
    sp.add_argument("--robots", type=int, default=3)
    sp.add_argument("--count", type=int, default=1)
    sp.set_defaults(func=cmd_gen_arch)

    sp = sub.add_parser("oracle-check", help="compare the search with exhaustive enumeration")
    common(sp, "csv")
    sp.add_argument("--instances", type=int, default=50)
    sp.add_argument("--max-algorithms", type=int, default=5)
    sp.add_argument("--max-nodes", type=int, default=4)
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.set_defaults(func=cmd_oracle_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (Infeasible, InfeasibleMemoryPlacement) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AllocationError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
