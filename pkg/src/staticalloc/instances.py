"""Random problem instances for property tests, oracle checks and scalability runs."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .algograph import AlgorithmGraph, AlgorithmSpec, lift_to_semilattice
from .architecture import Architecture, LinkParams, NodeClass, generate_architecture
from .memmodel import MemoryProfile

FIRST_ID = 2


@dataclass(frozen=True)
class Instance:
    graph: AlgorithmGraph      # lifted
    arch: Architecture
    profile: MemoryProfile


def random_dag_edges(n: int, rng: np.random.Generator, edge_prob: float = 0.35) -> list:
    """Edges between ids FIRST_ID.. respecting a random topological order."""
    perm = [int(x) for x in rng.permutation(n)]
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < edge_prob:
                edges.append((FIRST_ID + perm[i], FIRST_ID + perm[j]))
    return edges


def random_specs(n: int, rng: np.random.Generator, constrain_prob: float = 0.0,
                 external_prob: float = 0.3) -> list:
    specs = []
    for i in range(n):
        edge = float(rng.uniform(0.2, 5.0))
        fog = edge * float(rng.uniform(0.2, 0.9))
        cloud = fog * float(rng.uniform(0.2, 0.9))
        allowed = None
        if rng.random() < constrain_prob:
            classes = [c.value for c in NodeClass]
            k = int(rng.integers(1, len(classes) + 1))
            allowed = frozenset(str(c) for c in rng.choice(classes, size=k, replace=False))
        specs.append(AlgorithmSpec(
            id=FIRST_ID + i,
            name=f"A{i + 1}",
            exec_time={"edge": edge, "fog": fog, "cloud": cloud},
            input_internal_bits=float(rng.integers(0, 4096)),
            input_external_bits=float(rng.integers(1, 4096)) if rng.random() < external_prob else 0.0,
            output_bits=float(rng.integers(1, 4096)),
            processing_bytes=float(rng.integers(1, 4096)),
            allowed=allowed,
        ))
    return specs


def random_algorithm_graph(n: int, rng: np.random.Generator, edge_prob: float = 0.35,
                           constrain_prob: float = 0.0) -> AlgorithmGraph:
    """Unlifted random DAG with class-dependent execution times (cloud fastest)."""
    return AlgorithmGraph.build(random_specs(n, rng, constrain_prob), random_dag_edges(n, rng, edge_prob))


def random_link_table(rng: np.random.Generator, per_bit: bool = True) -> dict:
    table = {}
    for s in NodeClass:
        for t in NodeClass:
            table[(s, t)] = LinkParams(
                base_latency=float(rng.uniform(0.0, 1.0)),
                mu=float(rng.uniform(0.0, 0.3)),
                sigma=float(rng.uniform(0.0, 0.3)),
                per_bit_cost=float(rng.uniform(0.0, 1e-4)) if per_bit else 0.0,
            )
    return table


def random_instance(rng: np.random.Generator, max_algorithms: int = 5, max_nodes: int = 4,
                    min_algorithms: int = 1, constrain_prob: float = 0.2,
                    table: Optional[dict] = None) -> Instance:
    """Small instance with ``n_edge + 2 <= max_nodes`` nodes and random parameters."""
    n_alg = int(rng.integers(min_algorithms, max_algorithms + 1))
    n_edge = int(rng.integers(1, max(1, max_nodes - 2) + 1))
    table = table or random_link_table(rng)
    g = lift_to_semilattice(random_algorithm_graph(n_alg, rng, constrain_prob=constrain_prob))
    arch = generate_architecture(n_edge, rng, table)
    tm = {e: float(rng.integers(0, 512)) for e in arch.edge_nodes}
    return Instance(g, arch, MemoryProfile.from_graph(g, tm))
