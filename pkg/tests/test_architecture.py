import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, strategies as st

from staticalloc.architecture import (
    Architecture,
    LinkModel,
    LinkParams,
    Node,
    NodeClass,
    are_isomorphic,
    build_architecture,
    degree_signature,
    expected_link_time,
    folded_normal_mean,
    generate_architecture,
    nonisomorphic_batch,
    partition_robots,
    route,
    sample_link_time,
    standard_nodes,
)
from staticalloc.datasets import chain_architecture, paper_link_table

import oracles

E, F, C = NodeClass.EDGE, NodeClass.FOG, NodeClass.CLOUD


def unit_table(cost=1.0):
    p = LinkParams(cost)
    return {(s, t): p for s in NodeClass for t in NodeClass}


def arch(n_edge, pairs, table=None):
    return build_architecture(standard_nodes(n_edge), pairs, table or unit_table())


def relabel(a, perm):
    nodes = tuple(Node(perm[n.id], n.cls, n.name) for n in a.nodes)
    links = tuple(LinkModel(perm[l.src], perm[l.dst], l.base_latency, l.mu, l.sigma, l.per_bit_cost) for l in a.links)
    return Architecture(nodes, links)


def test_deterministic_link():
    link = LinkModel(0, 1, 0.5)
    rng = np.random.default_rng(0)
    assert sample_link_time(link, 1e6, rng) == 0.5
    assert expected_link_time(link, 123.0) == 0.5


def test_folded_normal_closed_form():
    assert folded_normal_mean(0.0, 1.0) == pytest.approx(math.sqrt(2 / math.pi), abs=1e-15)
    assert folded_normal_mean(-0.3, 0.0) == 0.3
    for mu, sigma in [(0.109, 0.087), (0.376, 0.365), (0.187, 0.397), (0.182, 0.111), (0.061, 0.023), (-1.0, 2.0)]:
        assert folded_normal_mean(mu, sigma) == pytest.approx(oracles.folded_normal_mean(mu, sigma), rel=1e-12)


def test_fog_to_edge_monte_carlo():
    link = LinkModel(0, 1, 0.475, 0.187, 0.397)
    draws = sample_link_time(link, 256, np.random.default_rng(1), size=10**6)
    assert draws.mean() == pytest.approx(expected_link_time(link, 256), rel=0.01)
    assert draws.min() >= 0.475


def test_edge_to_edge_monte_carlo():
    link = LinkModel(0, 1, 0.112, 0.061, 0.023)
    draws = sample_link_time(link, 0, np.random.default_rng(2), size=10**6)
    assert draws.mean() == pytest.approx(expected_link_time(link, 0), rel=0.005)


def test_standard_folded_normal_monte_carlo():
    draws = sample_link_time(LinkModel(0, 1, 0.0, 0.0, 1.0), 0, np.random.default_rng(3), size=10**6)
    assert abs(draws.mean() - math.sqrt(2 / math.pi)) < 0.01
    assert draws.min() >= 0


def test_sampling_is_seeded():
    link = LinkModel(0, 1, 0.1, 0.2, 0.3, 1e-3)
    a = sample_link_time(link, 10, np.random.default_rng(9), size=50)
    b = sample_link_time(link, 10, np.random.default_rng(9), size=50)
    assert np.array_equal(a, b)


def test_route_basics():
    a = arch(1, [(0, 1), (1, 2)])
    assert route(a, 0, 0) == []
    assert [(l.src, l.dst) for l in route(a, 0, 2)] == [(0, 1), (1, 2)]


def test_route_prefers_cheaper_path():
    nodes = standard_nodes(2)
    links = [LinkModel(0, 2, 0.5), LinkModel(2, 0, 0.5), LinkModel(2, 3, 0.5), LinkModel(3, 2, 0.5),
             LinkModel(0, 1, 0.2), LinkModel(1, 0, 0.2), LinkModel(1, 2, 0.2), LinkModel(2, 1, 0.2)]
    a = Architecture(nodes, tuple(links))
    # 0 -> 2 direct costs 0.5, via robot 1 costs 0.4
    assert [(l.src, l.dst) for l in a.route(0, 2)] == [(0, 1), (1, 2)]
    assert a.expected_transfer(0, 3, 0) == pytest.approx(oracles.cheapest_path_cost(a, 0, 3))


@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_route_matches_bruteforce(n, seed):
    a = generate_architecture(n, np.random.default_rng(seed), paper_link_table())
    for s in a.node_ids:
        for t in a.node_ids:
            if s != t:
                assert a.expected_transfer(s, t, 0) == pytest.approx(oracles.cheapest_path_cost(a, s, t), rel=1e-12)


def test_disconnected_rejected():
    with pytest.raises(ValueError):
        build_architecture(standard_nodes(2), [(0, 2), (2, 3)], unit_table())


def test_partition_examples():
    star = arch(3, [(0, 3), (1, 3), (2, 3), (3, 4)])
    assert partition_robots(star).tr_inf == frozenset()
    chain = arch(2, [(1, 0), (0, 2), (2, 3)])
    p = partition_robots(chain)
    assert p.tr0 == {0} and p.tr_inf == {1}


def test_partition_moves_robot_when_fog_link_removed():
    a = arch(3, [(0, 3), (1, 3), (1, 2), (0, 2), (3, 4)])
    assert partition_robots(a).tr0 == {0, 1}
    b = a.without_links_between([(1, 3)])
    assert partition_robots(b).tr0 == {0} and 1 in partition_robots(b).tr_inf


def test_generate_single_robot_is_unique():
    a = generate_architecture(1, np.random.default_rng(0), paper_link_table())
    assert {(l.src, l.dst) for l in a.links} == {(0, 1), (1, 0), (1, 2), (2, 1)}


def test_two_robot_shapes():
    # four (first fog link, extra link) draws; the star arises from two of them,
    # leaving three labelled shapes and two isomorphism classes
    table = paper_link_table()
    seen = {}
    rng = np.random.default_rng(5)
    for _ in range(200):
        a = generate_architecture(2, rng, table)
        seen[frozenset(frozenset((l.src, l.dst)) for l in a.links)] = a
    assert len(seen) == 3
    shapes = list(seen.values())
    classes = []
    for a in shapes:
        if not any(are_isomorphic(a, b) for b in classes):
            classes.append(a)
    assert len(classes) == 2
    batch = nonisomorphic_batch(2, np.random.default_rng(5), table)
    assert len(batch) == 2 and not are_isomorphic(batch[0], batch[1])


@given(st.integers(1, 7), st.integers(0, 2**32 - 1))
def test_generated_architectures_valid(n, seed):
    a = generate_architecture(n, np.random.default_rng(seed), paper_link_table())
    assert len(a.nodes) == n + 2
    assert len(a.fog_nodes) == 1 and len(a.cloud_nodes) == 1
    fog, cloud = a.fog_nodes[0], a.cloud_nodes[0]
    assert a.link(fog, cloud) and a.link(cloud, fog)
    assert all(l.src != cloud or l.dst == fog for l in a.links)
    assert any(a.link(fog, e) for e in a.edge_nodes)
    und = nx.Graph([(l.src, l.dst) for l in a.links])
    assert nx.is_connected(und) and und.number_of_nodes() == n + 2
    assert all(a.sample_transfer(fog, e, 0, np.random.default_rng(0)) >= a.route(fog, e)[0].base_latency
               for e in a.edge_nodes)


def test_batch_sizes():
    table = paper_link_table()
    assert len(nonisomorphic_batch(1, np.random.default_rng(0), table)) == 1
    assert len(nonisomorphic_batch(4, np.random.default_rng(0), table)) == 9


def _nx_iso(a, b):
    def g(x):
        d = nx.DiGraph()
        for n in x.nodes:
            d.add_node(n.id, cls=n.cls)
        d.add_edges_from((l.src, l.dst) for l in x.links)
        return d
    return nx.is_isomorphic(g(a), g(b), node_match=lambda p, q: p["cls"] == q["cls"])


@given(st.integers(2, 6), st.integers(0, 2**32 - 1), st.data())
def test_relabelled_architecture_is_isomorphic(n, seed, data):
    a = generate_architecture(n, np.random.default_rng(seed), paper_link_table())
    perm_edges = data.draw(st.permutations(range(n)))
    perm = {i: perm_edges[i] for i in range(n)} | {n: n, n + 1: n + 1}
    b = relabel(a, perm)
    assert are_isomorphic(a, b)


@given(st.integers(2, 5), st.integers(0, 2**32 - 1), st.integers(0, 2**32 - 1))
def test_isomorphism_matches_networkx(n, s1, s2):
    table = paper_link_table()
    a = generate_architecture(n, np.random.default_rng(s1), table)
    b = generate_architecture(n, np.random.default_rng(s2), table)
    assert are_isomorphic(a, b) == _nx_iso(a, b)


def test_equal_degrees_but_not_isomorphic():
    # robots 0..5; both have every robot at degree 2 but one is a 6-cycle and the other two triangles
    table = unit_table()
    nodes = standard_nodes(6)
    fog, cloud = 6, 7
    hexagon = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]
    triangles = [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)]
    common = [(fog, cloud), (0, fog), (3, fog)]
    a = build_architecture(nodes, hexagon + common, table)
    b = build_architecture(nodes, triangles + common, table)
    assert degree_signature(a) == degree_signature(b)
    assert not are_isomorphic(a, b)
    assert not _nx_iso(a, b)


def test_realize_freezes_delays():
    a = chain_architecture(2)
    r1 = a.realize(np.random.default_rng(4))
    r2 = a.realize(np.random.default_rng(4))
    assert r1 == r2
    for l0, l1 in zip(a.links, r1.links):
        assert l1.sigma == 0 and l1.base_latency >= l0.base_latency
