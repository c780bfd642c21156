"""End-to-end acceptance checks; each prints a single PASS/FAIL line."""
import json
import math
import time

import numpy as np

from staticalloc.algograph import AlgorithmGraph, AlgorithmSpec, lift_to_semilattice
from staticalloc.architecture import LinkModel, LinkParams, NodeClass, build_architecture, sample_link_time, standard_nodes
from staticalloc.cli import main
from staticalloc.datasets import chain_architecture, load_dataset, zero_link_table
from staticalloc.errors import Infeasible
from staticalloc.harness import ScalabilityConfig, SweepConfig, run_scalability, run_sweep
from staticalloc.instances import random_instance
from staticalloc.memmodel import MemoryProfile, memory_algebra, memory_report
from staticalloc.solver import enumerate_oracle, evaluate, solve
from staticalloc.timemodel import Allocation, aggregate_time, uniform_allocation

import oracles

ROOT2 = math.sqrt(2)
# reference sweep means for one robot, listed next to ours for manual comparison
REFERENCE_N1 = (1.083, 2.904)


def test_c01_memory_balancing(criterion, capsys):
    started = time.perf_counter()
    code = main(["balance-mem", "--method", "exact", "--optima", "--format", "json"])
    elapsed = time.perf_counter() - started
    doc = json.loads(capsys.readouterr().out)
    target = sorted([35.0, 36.0, 39.0, 38.0, 35.0])
    ok = code == 0 and doc["max_load"] == 39.0 and target in doc["equivalent_load_multisets"] and elapsed < 1.0
    criterion(1, "13-item balancing reaches 39 MB", ok,
              f"(max {doc['max_load']}, loads {sorted(doc['loads'].values())}, {elapsed:.3f}s)")


def test_c02_memory_algebra(criterion):
    profile = MemoryProfile(m_pr={2: 5.0, 5: 7.0, 6: 9.0}, m_in_external={2: 10.0, 6: 11.0})
    parallel = memory_algebra(AlgorithmGraph.build([AlgorithmSpec(5), AlgorithmSpec(6)], []), profile)
    serial = memory_algebra(AlgorithmGraph.build([AlgorithmSpec(2), AlgorithmSpec(6)], [(2, 6)]), profile)
    criterion(2, "memory algebra example", parallel == 27.0 and serial == 30.0,
              f"(parallel {parallel}, serial {serial})")


def _instances(seed, count):
    rng = np.random.default_rng(seed)
    return [random_instance(rng, max_algorithms=5, max_nodes=4) for _ in range(count)]


def test_c03_oracle_equivalence(criterion):
    started = time.perf_counter()
    worst, checked, infeasible, disagree = 0.0, 0, 0, 0
    for inst in _instances(2024, 50):
        try:
            ref = enumerate_oracle(inst.graph, inst.arch, inst.profile)
        except Infeasible:
            infeasible += 1
            try:
                solve(inst.graph, inst.arch, inst.profile)
                disagree += 1
            except Infeasible:
                pass
            continue
        ours = solve(inst.graph, inst.arch, inst.profile)
        worst = max(worst, abs(ours.distance - ref.distance))
        checked += 1
    elapsed = time.perf_counter() - started
    ok = worst <= 1e-9 and disagree == 0 and elapsed < 300
    criterion(3, "search equals exhaustive oracle", ok,
              f"({checked} solved, {infeasible} infeasible, max gap {worst:.1e}, {elapsed:.1f}s)")


def test_c04_normalization_anchor(criterion):
    ds = load_dataset("paper")
    cases = [(inst.graph, inst.arch, inst.profile) for inst in _instances(4, 50)]
    g = lift_to_semilattice(ds.graph)
    cases += [(g, chain_architecture(n, ds.link_table), MemoryProfile.from_graph(g)) for n in (1, 2, 3, 4)]
    worst = 0.0
    for g, a, profile in cases:
        cloud = a.cloud_nodes[0]
        d = evaluate(g, a, profile, uniform_allocation(g, cloud), check=False).distance
        worst = max(worst, abs(d - ROOT2))
    criterion(4, "all-on-cloud distance is sqrt(2)", worst <= 1e-9, f"({len(cases)} instances, max dev {worst:.1e})")


def test_c05_baseline_dominance(criterion):
    report = run_sweep(SweepConfig(n_range=(1, 2, 3, 4), reps_per_arch=10, seed=0))
    cells = {(c.n, c.arch, c.method): c for c in report.cells}
    dominated = all(
        all(o <= b + 1e-12 for o, b in zip(c.values, cells[(n, k, "baseline")].values))
        and c.mean <= cells[(n, k, "baseline")].mean + 1e-12
        for (n, k, m), c in cells.items() if m == "ours"
    )
    rows = {(r.n, r.method): r.mean for r in report.rows}
    ours1, base1 = rows[(1, "ours")], rows[(1, "baseline")]
    ordering = ours1 < ROOT2 < base1
    ok = dominated and not report.failures and ordering
    criterion(5, "ours never worse than baseline; n=1 ours < sqrt(2) < baseline", ok,
              f"(dominance {'ok' if dominated else 'violated'}; n=1 ours {ours1:.4f} baseline {base1:.4f}; "
              f"reference {REFERENCE_N1[0]} / {REFERENCE_N1[1]})")


def test_c06_zero_communication(criterion):
    rng = np.random.default_rng(6)
    checked, worst = 0, 0.0
    while checked < 20:
        inst = random_instance(rng, max_algorithms=4, max_nodes=6, constrain_prob=0.0, table=zero_link_table())
        g, a = inst.graph, inst.arch
        if len(g.algorithms) > len(a.nodes):
            continue
        nodes = [int(x) for x in rng.permutation(a.node_ids)]
        alloc = Allocation({v: nodes[i] for i, v in enumerate(g.algorithms)})
        expect = oracles.longest_exec_path(g, alloc.assignment, a)
        for t in aggregate_time(g, a, alloc).per_robot_final.values():
            worst = max(worst, abs(t - expect))
        checked += 1
    criterion(6, "zero link cost gives critical path", worst == 0.0, f"(20 instances, max dev {worst:.1e})")


def test_c07_folded_normal(criterion):
    draws = sample_link_time(LinkModel(0, 1, 0.0, 0.0, 1.0), 0, np.random.default_rng(7), size=10**6)
    dev = abs(draws.mean() - math.sqrt(2 / math.pi))
    criterion(7, "folded normal sampler", dev <= 0.01 and draws.min() >= 0, f"(mean dev {dev:.2e})")


def _robot_chain():
    # robot 0 holds the only fog link, robots 1 and 2 hang off it in a line
    table = {(s, t): LinkParams(1.0) for s in NodeClass for t in NodeClass}
    return build_architecture(standard_nodes(3), [(3, 4), (0, 3), (0, 1), (1, 2)], table)


def test_c08_fog_fed_relocation(criterion):
    a = _robot_chain()
    rng = np.random.default_rng(8)
    moves, violations = 0, 0
    for _ in range(20):
        ids = list(range(2, 7))
        profile = MemoryProfile(
            m_pr={i: float(rng.integers(1, 64)) for i in ids},
            m_in_external={i: float(rng.integers(1, 32)) if rng.random() < 0.6 else 0.0 for i in ids},
            m_in_internal={i: float(rng.integers(0, 16)) for i in ids},
            m_ou={i: float(rng.integers(0, 16)) for i in ids},
            tm={r: float(rng.integers(0, 8)) for r in a.edge_nodes},
        )
        base = {i: int(rng.choice(a.node_ids)) for i in ids}
        for v in ids:
            if profile.external(v) == 0:
                continue
            near = memory_report(profile, {**base, v: 0}, a.edge_nodes, arch=a).total
            for far in (1, 2):
                moved = memory_report(profile, {**base, v: far}, a.edge_nodes, arch=a).total
                moves += 1
                violations += not (moved >= near + profile.external(v))
    criterion(8, "moving fog-fed work off fog-linked robots costs its input", violations == 0,
              f"({moves} moves, {violations} violations)")


def test_c09_scalability(criterion):
    cfg = ScalabilityConfig()
    started = time.perf_counter()
    report = run_scalability(cfg)
    elapsed = time.perf_counter() - started
    reg = report.regression
    ok = reg is not None and reg.r2 >= 0.90 and elapsed < 900 and max(cfg.algorithms) == 8 and max(cfg.nodes) == 6
    criterion(9, "log-log fit of solve time", ok,
              f"(R2 {reg.r2:.4f}, p {reg.p_value:.2e}, {reg.n_points} points, {elapsed:.1f}s)")


def test_c10_determinism(criterion, tmp_path, capsys):
    outs = []
    for i in range(2):
        path = tmp_path / f"sweep{i}.csv"
        code = main(["sweep", "--seed", "7", "--out", str(path)])
        outs.append((code, path.read_bytes()))
    capsys.readouterr()
    ok = outs[0][0] == outs[1][0] == 0 and outs[0][1] == outs[1][1]
    criterion(10, "seeded sweep output is byte-identical", ok, f"({len(outs[0][1])} bytes)")
