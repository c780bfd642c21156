"""Solve time over a grid of algorithm counts and node counts, with a log-log plane fit."""
import argparse
import json
from dataclasses import asdict
from pathlib import Path

from staticalloc.harness import ScalabilityConfig, run_scalability


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--algorithms", type=int, nargs="+", default=[2, 4, 8])
    p.add_argument("--nodes", type=int, nargs="+", default=[3, 4, 5, 6])
    p.add_argument("--archs", type=int, default=10)
    p.add_argument("--graphs", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="results/scalability.json")
    args = p.parse_args()

    cfg = ScalabilityConfig(algorithms=tuple(args.algorithms), nodes=tuple(args.nodes), archs=args.archs,
                            graphs_per_arch=args.graphs, seed=args.seed)
    report = run_scalability(cfg)
    for pt in report.points:
        print(f"algorithms={pt.n_algorithms:<3} nodes={pt.n_nodes:<3} "
              f"mean {pt.mean_time * 1e3:9.3f} ms  explored {pt.mean_explored:10.1f}")
    reg = report.regression
    if reg is not None:
        b0, b1, b2 = reg.coef
        print(f"log t = {b0:.3f} + {b1:.3f} log(algorithms) + {b2:.3f} log(nodes)   R2={reg.r2:.4f} p={reg.p_value:.2e}")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps({"points": [asdict(x) for x in report.points],
                               "regression": asdict(reg) if reg else None}, indent=2) + "\n")


if __name__ == "__main__":
    main()
