"""Ours, the baseline and exhaustive enumeration on the bundled graph with robots linked to one fog."""
import argparse

from staticalloc.algograph import lift_to_semilattice
from staticalloc.datasets import chain_architecture, load_dataset
from staticalloc.solver import SolverConfig, enumerate_oracle, solve, solve_baseline_li2018


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--robots", type=int, default=1)
    p.add_argument("--memory-weight", type=float, default=1.0)
    p.add_argument("--dataset", default="paper")
    p.add_argument("--skip-oracle", action="store_true")
    args = p.parse_args()

    ds = load_dataset(args.dataset)
    g = lift_to_semilattice(ds.graph)
    a = chain_architecture(args.robots, ds.link_table)
    cfg = SolverConfig(memory_weight=args.memory_weight)
    runs = [("ours", solve), ("baseline", solve_baseline_li2018)]
    if not args.skip_oracle:
        runs.append(("oracle", enumerate_oracle))
    names = {s.id: s.name for s in g.specs}
    for label, fn in runs:
        res = fn(g, a, ds.profile(), cfg)
        placed = ", ".join(f"{names[v]}->{a.node(k).name or k}" for v, k in sorted(res.best_alloc.assignment.items()))
        times = ", ".join(f"{t:.3f}" for t in res.per_robot_times.values())
        print(f"{label:>8}: distance {res.distance:.6f}  max mem {res.memory_report.max_usage:g}  "
              f"times [{times}]  leaves {res.leaves}  {res.wall_time * 1e3:.1f} ms")
        print(f"{'':>10}{placed}")


if __name__ == "__main__":
    main()
