"""Random-architecture sweep: ours against the memory-blind baseline.

Writes the summary table (csv and json) plus per-architecture cells to --out.
"""
import argparse
import json
from dataclasses import asdict
from pathlib import Path

from staticalloc.harness import SweepConfig, emit_tables, run_sweep


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, nargs="+", default=[1, 2, 3, 4, 5, 6])
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dataset", default="paper")
    p.add_argument("--out", default="results/sweep")
    args = p.parse_args()

    cfg = SweepConfig(n_range=tuple(args.n), reps_per_arch=args.reps, seed=args.seed, dataset=args.dataset)
    report = run_sweep(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    emit_tables(report.rows, "csv", out / "summary.csv")
    emit_tables(report.rows, "json", out / "summary.json")
    cells = [{**asdict(c), "values": list(c.values)} for c in report.cells]
    (out / "cells.json").write_text(json.dumps({"cells": cells, "failures": report.failures,
                                                "n_archs": report.n_archs}, indent=2) + "\n")

    print(f"{'n':>3} {'archs':>5} {'ours':>10} {'baseline':>10} {'gap':>9}")
    by = {(r.n, r.method): r for r in report.rows}
    for n in cfg.n_range:
        o, b = by[(n, "ours")], by[(n, "baseline")]
        print(f"{n:>3} {report.n_archs[n]:>5} {o.mean:>10.4f} {b.mean:>10.4f} {b.mean - o.mean:>9.4f}")
    for f in report.failures:
        print("failed:", f)


if __name__ == "__main__":
    main()
