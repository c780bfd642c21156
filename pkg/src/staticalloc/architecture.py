"""Edge/fog/cloud network model, link latency sampling, and random architectures."""
from __future__ import annotations

import heapq
import itertools
import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Optional

import numpy as np

from .errors import GenerationExhausted, Unreachable, UnknownVertex

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


class NodeClass(str, Enum):
    EDGE = "edge"
    FOG = "fog"
    CLOUD = "cloud"


@dataclass(frozen=True)
class Node:
    id: int
    cls: NodeClass
    name: str = ""
    tm_bytes: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "cls", NodeClass(self.cls))

    @property
    def label(self) -> str:
        return self.name or f"{self.cls.value[0].upper()}{self.id}"


def folded_normal_mean(mu: float, sigma: float) -> float:
    if sigma == 0:
        return abs(mu)
    phi = 0.5 * (1.0 + math.erf((-mu / sigma) / math.sqrt(2.0)))
    return sigma * SQRT_2_OVER_PI * math.exp(-(mu * mu) / (2 * sigma * sigma)) + mu * (1 - 2 * phi)


@dataclass(frozen=True)
class LinkModel:
    """Directed link: ``base + |N(mu, sigma)| + per_bit_cost * payload`` seconds."""

    src: int
    dst: int
    base_latency: float
    mu: float = 0.0
    sigma: float = 0.0
    per_bit_cost: float = 0.0

    def __post_init__(self):
        if self.base_latency < 0 or self.sigma < 0 or self.per_bit_cost < 0:
            raise ValueError(f"link {self.src}->{self.dst}: negative latency parameter")

    @property
    def expected_delay(self) -> float:
        return folded_normal_mean(self.mu, self.sigma)


def expected_link_time(link: LinkModel, payload: float) -> float:
    return link.base_latency + link.expected_delay + link.per_bit_cost * payload


def sample_link_time(link: LinkModel, payload: float, rng: np.random.Generator, size=None):
    delay = np.abs(rng.normal(link.mu, link.sigma, size=size))
    return link.base_latency + delay + link.per_bit_cost * payload


@dataclass(frozen=True)
class RobotPartition:
    tr0: frozenset
    tr_inf: frozenset


@dataclass(frozen=True, eq=False)
class Architecture:
    nodes: tuple
    links: tuple

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(sorted(self.nodes, key=lambda n: n.id)))
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate node ids")
        by_id = {n.id: n for n in self.nodes}
        link_map = {}
        for link in self.links:
            if link.src not in by_id or link.dst not in by_id:
                raise UnknownVertex((link.src, link.dst))
            if link.src == link.dst:
                raise ValueError(f"self link on node {link.src}")
            link_map[(link.src, link.dst)] = link
        object.__setattr__(self, "_by_id", by_id)
        object.__setattr__(self, "_links", link_map)
        if self.nodes and not self._undirected_connected():
            raise ValueError("architecture is not connected")

    def __eq__(self, other):
        if not isinstance(other, Architecture):
            return NotImplemented
        return self.nodes == other.nodes and set(self.links) == set(other.links)

    def __hash__(self):
        return hash((self.nodes, frozenset(self.links)))

    def _undirected_connected(self) -> bool:
        adj = self.neighbors
        start = self.nodes[0].id
        seen = {start}
        stack = [start]
        while stack:
            for w in adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == len(self.nodes)

    @cached_property
    def neighbors(self) -> dict:
        adj = {n.id: set() for n in self.nodes}
        for (u, v) in self._links:
            adj[u].add(v)
            adj[v].add(u)
        return {k: frozenset(v) for k, v in adj.items()}

    def node(self, node_id: int) -> Node:
        try:
            return self._by_id[node_id]
        except KeyError:
            raise UnknownVertex(node_id) from None

    def __contains__(self, node_id) -> bool:
        return node_id in self._by_id

    @property
    def node_ids(self) -> tuple:
        return tuple(n.id for n in self.nodes)

    def ids_of(self, cls: NodeClass) -> tuple:
        return tuple(n.id for n in self.nodes if n.cls == cls)

    @property
    def edge_nodes(self) -> tuple:
        return self.ids_of(NodeClass.EDGE)

    @property
    def fog_nodes(self) -> tuple:
        return self.ids_of(NodeClass.FOG)

    @property
    def cloud_nodes(self) -> tuple:
        return self.ids_of(NodeClass.CLOUD)

    def link(self, src: int, dst: int) -> Optional[LinkModel]:
        return self._links.get((src, dst))

    @cached_property
    def _routes(self) -> dict:
        return {}

    def route(self, src: int, dst: int) -> list:
        """Minimum expected-latency path (payload 0) as a list of links."""
        self.node(src), self.node(dst)
        key = (src, dst)
        if key in self._routes:
            return self._routes[key]
        if src == dst:
            self._routes[key] = []
            return []
        out = {}
        for (u, v), link in self._links.items():
            out.setdefault(u, []).append((v, link))
        # (cost, hops, path) keeps ties deterministic
        heap = [(0.0, 0, (src,))]
        settled = set()
        while heap:
            cost, hops, path = heapq.heappop(heap)
            u = path[-1]
            if u in settled:
                continue
            settled.add(u)
            if u == dst:
                links = [self._links[(a, b)] for a, b in zip(path, path[1:])]
                self._routes[key] = links
                return links
            for v, link in sorted(out.get(u, []), key=lambda t: t[0]):
                if v not in settled:
                    heapq.heappush(heap, (cost + expected_link_time(link, 0.0), hops + 1, path + (v,)))
        raise Unreachable(f"no directed route from {src} to {dst}")

    @cached_property
    def transfer_table(self) -> tuple:
        """Expected transfer cost split as ``(constant, per_bit)`` matrices over node index pairs.

        The expected time to move ``b`` bits from node ``u`` to ``v`` along the
        cached route is ``const[iu][iv] + per_bit[iu][iv] * b``.
        """
        ids = self.node_ids
        n = len(ids)
        const = [[0.0] * n for _ in range(n)]
        per_bit = [[0.0] * n for _ in range(n)]
        for i, u in enumerate(ids):
            for j, v in enumerate(ids):
                if i == j:
                    continue
                hops = self.route(u, v)
                const[i][j] = sum(h.base_latency + h.expected_delay for h in hops)
                per_bit[i][j] = sum(h.per_bit_cost for h in hops)
        return const, per_bit

    @cached_property
    def index(self) -> dict:
        return {nid: i for i, nid in enumerate(self.node_ids)}

    def expected_transfer(self, src: int, dst: int, payload: float) -> float:
        const, per_bit = self.transfer_table
        i, j = self.index[src], self.index[dst]
        return const[i][j] + per_bit[i][j] * payload

    def sample_transfer(self, src: int, dst: int, payload: float, rng: np.random.Generator) -> float:
        return float(sum(sample_link_time(h, payload, rng) for h in self.route(src, dst)))

    def realize(self, rng: np.random.Generator) -> "Architecture":
        """Freeze one random-delay draw per link into a deterministic architecture."""
        links = []
        for link in self.links:
            delay = float(abs(rng.normal(link.mu, link.sigma)))
            links.append(replace(link, base_latency=link.base_latency + delay, mu=0.0, sigma=0.0))
        return Architecture(nodes=self.nodes, links=tuple(links))

    def without_links_between(self, pairs: Iterable) -> "Architecture":
        drop = {frozenset(p) for p in pairs}
        links = tuple(l for l in self.links if frozenset((l.src, l.dst)) not in drop)
        return Architecture(nodes=self.nodes, links=links)


def route(a: Architecture, src: int, dst: int) -> list:
    return a.route(src, dst)


def partition_robots(a: Architecture, gateways: Iterable = (NodeClass.FOG,)) -> RobotPartition:
    gateway_ids = {n.id for n in a.nodes if n.cls in set(map(NodeClass, gateways))}
    tr0 = frozenset(e for e in a.edge_nodes if a.neighbors[e] & gateway_ids)
    return RobotPartition(tr0=tr0, tr_inf=frozenset(a.edge_nodes) - tr0)


@dataclass(frozen=True)
class LinkParams:
    base_latency: float
    mu: float = 0.0
    sigma: float = 0.0
    per_bit_cost: float = 0.0

    def between(self, src: int, dst: int) -> LinkModel:
        return LinkModel(src, dst, self.base_latency, self.mu, self.sigma, self.per_bit_cost)


LinkTable = Mapping  # (src NodeClass, dst NodeClass) -> LinkParams


def link_pair(table: LinkTable, a: Node, b: Node) -> tuple:
    try:
        return table[(a.cls, b.cls)].between(a.id, b.id), table[(b.cls, a.cls)].between(b.id, a.id)
    except KeyError as exc:
        raise KeyError(f"link table has no entry for {exc.args[0]}") from None


def build_architecture(nodes: Iterable[Node], undirected: Iterable, table: LinkTable) -> Architecture:
    """Architecture with a link in each direction for every undirected pair."""
    nodes = tuple(nodes)
    by_id = {n.id: n for n in nodes}
    links = []
    for u, v in undirected:
        links.extend(link_pair(table, by_id[u], by_id[v]))
    return Architecture(nodes=nodes, links=tuple(links))


def standard_nodes(n_edge: int) -> tuple:
    edges = tuple(Node(i, NodeClass.EDGE, f"E{i + 1}") for i in range(n_edge))
    return edges + (Node(n_edge, NodeClass.FOG, "F"), Node(n_edge + 1, NodeClass.CLOUD, "C"))


def _connected(n_nodes: int, pairs: Iterable) -> bool:
    adj = {i: set() for i in range(n_nodes)}
    for u, v in pairs:
        adj[u].add(v)
        adj[v].add(u)
    seen, stack = {0}, [0]
    while stack:
        for w in adj[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == n_nodes


def generate_architecture(n_edge: int, rng: np.random.Generator, table: LinkTable,
                          max_attempts: int = 10_000) -> Architecture:
    """Random connected architecture with ``n_edge`` robots, one fog and one cloud.

    The cloud hangs off the fog; the fog reaches at least one robot; a uniform
    number of extra links in ``[n_edge - 1, n_edge (n_edge - 1) / 2]`` is
    scattered among robot/fog pairs. Draws repeat until connected.
    """
    if n_edge < 1:
        raise ValueError("n_edge must be >= 1")
    nodes = standard_nodes(n_edge)
    fog, cloud = n_edge, n_edge + 1
    lo, hi = n_edge - 1, n_edge * (n_edge - 1) // 2
    for _ in range(max_attempts):
        first = (int(rng.integers(n_edge)), fog)
        pool = [p for p in itertools.combinations(range(n_edge + 1), 2) if p != (first[0], fog)]
        m = int(rng.integers(lo, hi + 1))
        picked = [pool[i] for i in sorted(rng.choice(len(pool), size=m, replace=False))] if m else []
        pairs = [(fog, cloud), first] + picked
        if _connected(n_edge + 2, pairs):
            return build_architecture(nodes, pairs, table)
    raise GenerationExhausted(f"no connected architecture after {max_attempts} draws")


def _adjacency(a: Architecture) -> frozenset:
    return frozenset((l.src, l.dst) for l in a.links)


def degree_signature(a: Architecture) -> tuple:
    """Per class, the sorted (in-degree, out-degree) pairs."""
    adj = _adjacency(a)
    sig = []
    for cls in NodeClass:
        degs = sorted(
            (sum(1 for u, v in adj if v == n.id), sum(1 for u, v in adj if u == n.id))
            for n in a.nodes if n.cls == cls
        )
        sig.append((cls.value, tuple(degs)))
    return tuple(sig)


def find_isomorphism(a: Architecture, b: Architecture) -> Optional[dict]:
    """Class-preserving node bijection mapping a's adjacency onto b's, or None."""
    if len(a.nodes) != len(b.nodes) or degree_signature(a) != degree_signature(b):
        return None
    adj_a, adj_b = _adjacency(a), _adjacency(b)
    if len(adj_a) != len(adj_b):
        return None

    def degree(adj, v):
        return (sum(1 for x, y in adj if y == v), sum(1 for x, y in adj if x == v))

    order = sorted(a.node_ids, key=lambda v: -len(a.neighbors[v]))
    candidates = {
        v: [w for w in b.node_ids if b.node(w).cls == a.node(v).cls and degree(adj_b, w) == degree(adj_a, v)]
        for v in order
    }
    mapping: dict = {}
    used: set = set()

    def consistent(v, w):
        for u, x in mapping.items():
            if ((u, v) in adj_a) != ((x, w) in adj_b) or ((v, u) in adj_a) != ((w, x) in adj_b):
                return False
        return True

    def extend(i):
        if i == len(order):
            return True
        v = order[i]
        for w in candidates[v]:
            if w not in used and consistent(v, w):
                mapping[v] = w
                used.add(w)
                if extend(i + 1):
                    return True
                del mapping[v]
                used.discard(w)
        return False

    return dict(mapping) if extend(0) else None


def are_isomorphic(a: Architecture, b: Architecture) -> bool:
    return find_isomorphism(a, b) is not None


@dataclass
class BatchStats:
    generated: int = 0
    rejected: int = 0
    forced: int = 0


def nonisomorphic_batch(n_edge: int, rng: np.random.Generator, table: LinkTable,
                        size: Optional[int] = None, max_failures: int = 5,
                        stats: Optional[BatchStats] = None, exhaust_failures: int = 60) -> list:
    """Up to ``n_edge + 5`` pairwise non-isomorphic random architectures.

    After ``max_failures`` consecutive isomorphic draws the next draw is kept
    regardless. With one or two robots there are only one or two shapes, so
    duplicates are never forced: the batch ends after ``exhaust_failures``
    consecutive isomorphic draws instead.
    """
    size = n_edge + 5 if size is None else size
    stats = stats if stats is not None else BatchStats()
    accepted: list = []
    while len(accepted) < size:
        failures = 0
        while True:
            cand = generate_architecture(n_edge, rng, table)
            stats.generated += 1
            if not any(are_isomorphic(cand, prev) for prev in accepted):
                accepted.append(cand)
                break
            stats.rejected += 1
            failures += 1
            if n_edge <= 2:
                if failures >= exhaust_failures:
                    return accepted
                continue
            if failures >= max_failures:
                accepted.append(generate_architecture(n_edge, rng, table))
                stats.generated += 1
                stats.forced += 1
                break
    return accepted
