import itertools
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from staticalloc.algograph import SINK, SOURCE, AlgorithmGraph, AlgorithmSpec, lift_to_semilattice
from staticalloc.architecture import Architecture, NodeClass, build_architecture, standard_nodes
from staticalloc.datasets import timing_example, chain_architecture, zero_link_table
from staticalloc.errors import ConstraintViolation, InvalidPrefix
from staticalloc.instances import random_instance, random_link_table
from staticalloc.timemodel import Allocation, aggregate_time, partial_time, response_time, uniform_allocation

import oracles

seeds = st.integers(0, 2**32 - 1)


def random_alloc(g, a, rng):
    out = {}
    for v in g.algorithms:
        s = g.spec(v)
        nodes = [n.id for n in a.nodes if s.allows(n.id, n.cls.value)]
        out[v] = int(rng.choice(nodes))
    return Allocation(out)


def injective_alloc(g, a, rng):
    nodes = [int(x) for x in rng.permutation(a.node_ids)]
    return Allocation({v: nodes[i] for i, v in enumerate(g.algorithms)})


def test_chain_on_robot_without_links():
    g = lift_to_semilattice(AlgorithmGraph.build(
        [AlgorithmSpec(2, exec_time={"edge": 1.0}), AlgorithmSpec(3, exec_time={"edge": 2.0})], [(2, 3)]))
    a = build_architecture(standard_nodes(1), [(0, 1), (1, 2)], zero_link_table())
    rep = response_time(g, a, uniform_allocation(g, 0), 0)
    assert rep.aggregate == 3.0
    assert rep.per_algorithm[2] == (0.0, 1.0) and rep.per_algorithm[3] == (1.0, 3.0)


def test_paper_graph_all_on_cloud(bundled_lifted, chain1, ids):
    g, a = bundled_lifted, chain1
    robot, fog, cloud = 0, 1, 2

    def link(s, t):
        l = a.link(s, t)
        return l.base_latency + oracles.folded_normal_mean(l.mu, l.sigma)

    up = link(robot, fog) + link(fog, cloud)
    down = link(cloud, fog) + link(fog, robot)
    r = {name: g.spec(v).exec_time["cloud"] for name, v in ids.items()}
    # static order: 1, A1, A2, A4, A3, A5, A6, A7, 0; every algorithm shares the cloud
    f1 = up + r["A1"]
    f2 = f1 + r["A2"]
    f4 = f2 + r["A4"]
    f3 = max(f2, f4) + r["A3"]
    f5 = max(f4, f3) + r["A5"]
    f6 = max(f3, f5) + r["A6"]
    f7 = f6 + r["A7"]
    final = f7 + down
    rep = response_time(g, a, uniform_allocation(g, cloud), robot)
    assert rep.aggregate == pytest.approx(final, rel=1e-12)
    assert rep.aggregate == pytest.approx(oracles.reference_time(g, a, uniform_allocation(g, cloud).assignment, robot))


def test_max_rule_for_parallel_predecessors():
    g = lift_to_semilattice(AlgorithmGraph.build([
        AlgorithmSpec(2, exec_time={"edge": 5.0, "fog": 5.0, "cloud": 5.0}),
        AlgorithmSpec(3, exec_time={"edge": 7.0, "fog": 7.0, "cloud": 7.0}),
        AlgorithmSpec(4, exec_time={"edge": 1.0, "fog": 1.0, "cloud": 1.0}),
    ], [(2, 4), (3, 4)]))
    a = build_architecture(standard_nodes(1), [(0, 1), (1, 2)], zero_link_table())
    rep = response_time(g, a, Allocation({2: 0, 3: 1, 4: 2}), 0)
    assert rep.per_algorithm[4][0] == 7.0


def test_example_instance_matches_reference():
    g, a = timing_example()
    g = lift_to_semilattice(g)
    for combo in itertools.product(a.node_ids, repeat=len(g.algorithms)):
        alloc = Allocation(dict(zip(g.algorithms, combo)))
        rep = aggregate_time(g, a, alloc)
        for e in a.edge_nodes:
            assert rep.per_robot_final[e] == pytest.approx(oracles.reference_time(g, a, alloc.assignment, e), abs=1e-12)


def test_single_robot_aggregate(bundled_lifted, chain1):
    alloc = uniform_allocation(bundled_lifted, 1)
    rep = aggregate_time(bundled_lifted, chain1, alloc)
    assert rep.aggregate == rep.per_robot_final[0]


def test_symmetric_robots(bundled_lifted, bundled):
    a = chain_architecture(2, bundled.link_table)
    rep = aggregate_time(bundled_lifted, a, uniform_allocation(bundled_lifted, 3))
    t0, t1 = rep.per_robot_final[0], rep.per_robot_final[1]
    assert t0 == t1
    assert rep.aggregate == pytest.approx(math.sqrt(2) * t0)


def test_constraint_violation(bundled, chain1):
    specs = [replace(s, allowed=frozenset({"cloud"})) for s in bundled.graph.specs]
    g = lift_to_semilattice(AlgorithmGraph.build(specs, bundled.graph.edges))
    with pytest.raises(ConstraintViolation):
        response_time(g, chain1, uniform_allocation(g, 1), 0)
    with pytest.raises(ConstraintViolation):
        response_time(g, chain1, uniform_allocation(g, 2), 1)  # initiator must be a robot


def test_partial_time_examples(bundled_lifted, chain1, ids):
    g, a = bundled_lifted, chain1
    assert partial_time(g, a, {}) == 0.0
    full = uniform_allocation(g, 1).assignment
    assert partial_time(g, a, full) == pytest.approx(aggregate_time(g, a, uniform_allocation(g, 1)).aggregate)
    prefix = {ids["A1"]: 2, ids["A2"]: 1}
    truncated = lift_to_semilattice(g.__class__.build([g.spec(v) for v in prefix], [(ids["A1"], ids["A2"])]))
    assert partial_time(g, a, prefix) == pytest.approx(
        oracles.reference_time(truncated, a, prefix, 0, returns=False), abs=1e-12)
    with pytest.raises(InvalidPrefix):
        partial_time(g, a, {ids["A2"]: 1})


@given(seeds)
def test_matches_reference_recursion(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, max_algorithms=6, max_nodes=5, constrain_prob=0.0)
    alloc = random_alloc(inst.graph, inst.arch, rng)
    rep = aggregate_time(inst.graph, inst.arch, alloc)
    for e, t in rep.per_robot_final.items():
        assert t == pytest.approx(oracles.reference_time(inst.graph, inst.arch, alloc.assignment, e), rel=1e-12)
    assert rep.aggregate ** 2 == pytest.approx(sum(t * t for t in rep.per_robot_final.values()), rel=1e-12)


@given(seeds)
def test_schedule_invariants(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, max_algorithms=6, max_nodes=5, constrain_prob=0.0)
    alloc = random_alloc(inst.graph, inst.arch, rng)
    for e in inst.arch.edge_nodes:
        rep = response_time(inst.graph, inst.arch, alloc, e)
        spans = rep.per_algorithm
        assert all(f >= s for s, f in spans.values())
        for node, vs in rep.schedule.items():
            for u, v in itertools.combinations(vs, 2):
                (s1, f1), (s2, f2) = spans[u], spans[v]
                if f1 > s1 and f2 > s2:
                    assert f1 <= s2 or f2 <= s1
        for u, v in inst.graph.edges:
            assert spans[u][1] <= spans[v][0] + 1e-12


@given(seeds, st.sampled_from(["exec", "latency", "payload"]), st.floats(0.0, 3.0))
def test_monotone_in_costs(seed, what, bump):
    # routes are fixed at zero payload, so latency monotonicity needs per-bit costs of zero
    rng = np.random.default_rng(seed)
    table = random_link_table(rng, per_bit=what != "latency")
    inst = random_instance(rng, max_algorithms=5, max_nodes=5, constrain_prob=0.0, table=table)
    g, a = inst.graph, inst.arch
    alloc = random_alloc(g, a, rng)
    before = aggregate_time(g, a, alloc).per_robot_final
    if what == "exec":
        v = int(rng.choice(g.algorithms))
        spec = g.spec(v)
        k = str(rng.choice(sorted(spec.exec_time)))
        spec2 = replace(spec, exec_time={**spec.exec_time, k: spec.exec_time[k] + bump})
        g = AlgorithmGraph(tuple(spec2 if s.id == v else s for s in g.specs), g.edges, g.extra_bits)
    elif what == "latency":
        i = int(rng.integers(len(a.links)))
        links = list(a.links)
        links[i] = replace(links[i], base_latency=links[i].base_latency + bump)
        a = Architecture(a.nodes, tuple(links))
    else:
        v = int(rng.choice(g.algorithms))
        spec = g.spec(v)
        spec2 = replace(spec, output_bits=spec.output_bits + bump * 1e4,
                        input_internal_bits=spec.input_internal_bits + bump * 1e4)
        g = AlgorithmGraph(tuple(spec2 if s.id == v else s for s in g.specs), g.edges, g.extra_bits)
    after = aggregate_time(g, a, alloc).per_robot_final
    for e in before:
        assert after[e] >= before[e] - 1e-12


@given(seeds)
def test_zero_communication_is_critical_path(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, max_algorithms=4, max_nodes=6, constrain_prob=0.0, table=zero_link_table())
    g, a = inst.graph, inst.arch
    if len(g.algorithms) > len(a.nodes):
        return
    alloc = injective_alloc(g, a, rng)
    expect = oracles.longest_exec_path(g, alloc.assignment, a)
    for e, t in aggregate_time(g, a, alloc).per_robot_final.items():
        assert t == pytest.approx(expect, abs=1e-12)


@given(seeds)
def test_sampled_mode_is_deterministic(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, max_algorithms=5, max_nodes=5, constrain_prob=0.0)
    alloc = random_alloc(inst.graph, inst.arch, rng)
    r1 = aggregate_time(inst.graph, inst.arch, alloc, "sampled", np.random.default_rng(seed))
    r2 = aggregate_time(inst.graph, inst.arch, alloc, "sampled", np.random.default_rng(seed))
    assert r1.per_robot_final == r2.per_robot_final and r1.aggregate == r2.aggregate


def test_sampled_mean_approaches_expected(bundled_lifted, chain1):
    alloc = uniform_allocation(bundled_lifted, 2)
    rng = np.random.default_rng(0)
    draws = [aggregate_time(bundled_lifted, chain1, alloc, "sampled", rng).aggregate for _ in range(4000)]
    assert np.mean(draws) == pytest.approx(aggregate_time(bundled_lifted, chain1, alloc).aggregate, rel=0.02)


@given(seeds, st.data())
def test_prefix_monotone(seed, data):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, max_algorithms=6, max_nodes=5, constrain_prob=0.0)
    g, a = inst.graph, inst.arch
    alloc = random_alloc(g, a, rng).assignment
    order = [v for v in g.static_order() if v not in (SINK, SOURCE)]
    cuts = sorted(data.draw(st.lists(st.integers(0, len(order)), min_size=2, max_size=4)))
    values = [partial_time(g, a, {v: alloc[v] for v in order[:c]}) for c in cuts]
    assert all(x <= y + 1e-12 for x, y in zip(values, values[1:]))
    assert partial_time(g, a, alloc) == pytest.approx(aggregate_time(g, a, Allocation(alloc)).aggregate, rel=1e-12)
