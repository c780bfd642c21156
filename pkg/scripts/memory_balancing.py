"""Memory-only balancing on the bundled 13-item instance (or a JSON instance).

Prints the exact and greedy placements and every optimal load multiset.
"""
import argparse

from staticalloc.architecture import RobotPartition
from staticalloc.datasets import memory_example, memory_instance_from_dict
from staticalloc.io import read_json
from staticalloc.memmodel import balance_restricted, bin_loads, equivalent_optima, variance


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--instance", help="memory instance JSON")
    args = p.parse_args()
    inst = memory_instance_from_dict(read_json(args.instance)) if args.instance else memory_example()
    robots = range(len(inst.robots))
    part = RobotPartition(tr0=inst.tr0, tr_inf=frozenset(robots) - inst.tr0)

    for method in ("exact", "lpt"):
        res = balance_restricted(inst.profile(), part, inst.restricted, inst.unrestricted, method)
        loads = [res.loads[r] for r in robots]
        print(f"[{method}] max {max(loads):g} MB, variance {variance(loads):.3f}")
        for r in robots:
            items = [inst.name_of(i) for i in sorted(res.assignment) if res.assignment[i] == r]
            print(f"  {inst.robots[r]:>4}: {res.loads[r]:6g} MB  {' '.join(items)}")

    res = balance_restricted(inst.profile(), part, inst.restricted, inst.unrestricted, "exact")
    priors = [res.stage1_loads[r] for r in robots]
    vals = [inst.value_of(i) for i in sorted(inst.unrestricted)]
    optima = equivalent_optima(vals, len(priors), priors)
    shapes = sorted({tuple(sorted(bin_loads(vals, o, len(priors), priors))) for o in optima})
    print(f"{len(optima)} optimal placements, {len(shapes)} distinct load multisets:")
    for s in shapes:
        print("  ", list(s))
    if inst.reported_loads:
        ref = tuple(sorted(inst.reported_loads.values()))
        print("reference multiset", list(ref), "found" if ref in shapes else "NOT found")


if __name__ == "__main__":
    main()
