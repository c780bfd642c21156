"""Algorithm dependency graphs lifted to a semi-lattice with a virtual top and bottom.

Vertex ids 0 and 1 are reserved: ``SINK`` (the virtual bottom every execution
ends in) and ``SOURCE`` (the virtual top every execution starts from). Both are
pinned to the initiating robot and carry no work.
"""
from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import CyclicDependency, TooManyFlows, UnknownVertex

SINK = 0
SOURCE = 1
VIRTUAL = frozenset({SINK, SOURCE})

DEFAULT_MAX_FLOWS = 100_000

NodeKey = Union[int, str]


@dataclass(frozen=True)
class AlgorithmSpec:
    """Per-algorithm cost data.

    ``exec_time`` maps a node id or a node class name ("edge", "fog", "cloud")
    to seconds; a node id entry wins over its class entry. ``allowed`` holds
    node ids and/or class names; ``None`` means every node is allowed.
    Sizes on the wire are in bits, processing memory in bytes.
    """

    id: int
    name: str = ""
    exec_time: Mapping[NodeKey, float] = field(default_factory=dict)
    input_internal_bits: float = 0.0
    input_external_bits: float = 0.0
    output_bits: float = 0.0
    processing_bytes: float = 0.0
    allowed: Optional[frozenset] = None

    def __post_init__(self):
        for attr in ("input_internal_bits", "input_external_bits", "output_bits", "processing_bytes"):
            if getattr(self, attr) < 0:
                raise ValueError(f"algorithm {self.id}: {attr} must be >= 0")
        if any(t < 0 for t in self.exec_time.values()):
            raise ValueError(f"algorithm {self.id}: execution times must be >= 0")
        if self.allowed is not None:
            if not isinstance(self.allowed, frozenset):
                object.__setattr__(self, "allowed", frozenset(self.allowed))
            if not self.allowed:
                raise ValueError(f"algorithm {self.id}: allowed node set is empty")

    @property
    def label(self) -> str:
        return self.name or f"A{self.id}"

    @property
    def is_virtual(self) -> bool:
        return self.id in VIRTUAL

    def exec_on(self, node_id: int, node_class: str) -> float:
        if node_id in self.exec_time:
            return self.exec_time[node_id]
        if node_class in self.exec_time:
            return self.exec_time[node_class]
        if self.is_virtual or not self.exec_time:
            return 0.0
        raise KeyError(f"no execution time for algorithm {self.label} on node {node_id} ({node_class})")

    def allows(self, node_id: int, node_class: str) -> bool:
        if self.allowed is None:
            return True
        return node_id in self.allowed or node_class in self.allowed


def virtual_spec(vid: int) -> AlgorithmSpec:
    return AlgorithmSpec(id=vid, name="1" if vid == SOURCE else "0")


@dataclass(frozen=True, eq=False)
class AlgorithmGraph:
    specs: tuple
    edges: frozenset
    extra_bits: Mapping = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        ids = [s.id for s in self.specs]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate algorithm ids")
        known = set(ids)
        for u, v in self.edges:
            if u not in known or v not in known:
                raise UnknownVertex((u, v))
            if u == v:
                raise CyclicDependency(f"self loop on {u}")
        object.__setattr__(self, "_by_id", {s.id: s for s in self.specs})
        preds: dict[int, list] = {i: [] for i in ids}
        succs: dict[int, list] = {i: [] for i in ids}
        for u, v in sorted(self.edges):
            succs[u].append(v)
            preds[v].append(u)
        object.__setattr__(self, "_preds", {k: tuple(v) for k, v in preds.items()})
        object.__setattr__(self, "_succs", {k: tuple(v) for k, v in succs.items()})

    @classmethod
    def build(cls, specs: Iterable[AlgorithmSpec], edges: Iterable, extra_bits: Optional[Mapping] = None):
        specs = tuple(sorted(specs, key=lambda s: s.id))
        extra = {}
        norm_edges = set()
        for e in edges:
            u, v = int(e[0]), int(e[1])
            norm_edges.add((u, v))
            if len(e) > 2 and e[2]:
                extra[(u, v)] = float(e[2])
        if extra_bits:
            extra.update({(int(u), int(v)): float(b) for (u, v), b in extra_bits.items()})
        return cls(specs=specs, edges=frozenset(norm_edges), extra_bits=extra)

    def __eq__(self, other):
        if not isinstance(other, AlgorithmGraph):
            return NotImplemented
        return (
            self.specs == other.specs
            and self.edges == other.edges
            and {k: v for k, v in self.extra_bits.items() if v} == {k: v for k, v in other.extra_bits.items() if v}
        )

    def __hash__(self):
        return hash((tuple(s.id for s in self.specs), self.edges))

    @property
    def vertices(self) -> tuple:
        return tuple(s.id for s in self.specs)

    @property
    def algorithms(self) -> tuple:
        """Non-virtual vertex ids in ascending order."""
        return tuple(s.id for s in self.specs if not s.is_virtual)

    def spec(self, v: int) -> AlgorithmSpec:
        try:
            return self._by_id[v]
        except KeyError:
            raise UnknownVertex(v) from None

    def __contains__(self, v) -> bool:
        return v in self._by_id

    def preds(self, v: int) -> tuple:
        return self._preds[v]

    def succs(self, v: int) -> tuple:
        return self._succs[v]

    def extra(self, u: int, v: int) -> float:
        return self.extra_bits.get((u, v), 0.0)

    @property
    def is_lifted(self) -> bool:
        if SOURCE not in self or SINK not in self:
            return False
        sources = [v for v in self.vertices if not self._preds[v]]
        sinks = [v for v in self.vertices if not self._succs[v]]
        return sources == [SOURCE] and sinks == [SINK]

    def topological_order(self) -> list:
        indeg = {v: len(self._preds[v]) for v in self.vertices}
        ready = sorted(v for v, d in indeg.items() if d == 0)
        order = []
        while ready:
            v = ready.pop(0)
            order.append(v)
            for w in self._succs[v]:
                indeg[w] -= 1
                if indeg[w] == 0:
                    ready.append(w)
            ready.sort()
        if len(order) != len(indeg):
            raise CyclicDependency("algorithm graph contains a cycle")
        return order

    def descendants(self, v: int) -> frozenset:
        key = ("desc", v)
        if key not in self._cache:
            seen = set()
            stack = list(self._succs[v])
            while stack:
                w = stack.pop()
                if w not in seen:
                    seen.add(w)
                    stack.extend(self._succs[w])
            self._cache[key] = frozenset(seen)
        return self._cache[key]

    def comparable(self, u: int, v: int) -> bool:
        """True when a directed path joins ``u`` and ``v`` in either direction."""
        return v in self.descendants(u) or u in self.descendants(v)

    def flows(self, max_flows: int = DEFAULT_MAX_FLOWS) -> tuple:
        key = ("flows", max_flows)
        if key not in self._cache:
            self._cache[key] = execution_flows(self, max_flows=max_flows)
        return self._cache[key]

    def heights(self, max_flows: int = DEFAULT_MAX_FLOWS) -> dict:
        key = ("heights", max_flows)
        if key not in self._cache:
            h: dict = {}
            for flow in self.flows(max_flows):
                n = len(flow)
                for i, v in enumerate(flow):
                    h[v] = max(h.get(v, 0), n - i)
            self._cache[key] = h
        return self._cache[key]

    def static_order(self, max_flows: int = DEFAULT_MAX_FLOWS) -> list:
        """Vertices by descending height, ties by id. Always a topological order."""
        h = self.heights(max_flows)
        return sorted(self.vertices, key=lambda v: (-h[v], v))


def lift_to_semilattice(dag: AlgorithmGraph) -> AlgorithmGraph:
    dag.topological_order()  # raises on cycles
    specs = list(dag.specs)
    present = set(dag.vertices)
    for vid in (SINK, SOURCE):
        if vid not in present:
            specs.append(virtual_spec(vid))
    edges = set(dag.edges)
    has_pred = {v for _, v in edges}
    has_succ = {u for u, _ in edges}
    real = [s.id for s in specs if not s.is_virtual]
    for v in real:
        if v not in has_pred:
            edges.add((SOURCE, v))
        if v not in has_succ:
            edges.add((v, SINK))
    if not real:
        edges.add((SOURCE, SINK))
    return AlgorithmGraph(specs=tuple(sorted(specs, key=lambda s: s.id)), edges=frozenset(edges),
                          extra_bits=dict(dag.extra_bits))


def execution_flows(g: AlgorithmGraph, max_flows: int = DEFAULT_MAX_FLOWS) -> tuple:
    """Every directed path from the virtual top to the virtual bottom."""
    if SOURCE not in g or SINK not in g:
        raise UnknownVertex("graph is not lifted")
    flows = []
    path = [SOURCE]

    def walk(v):
        if v == SINK:
            if len(flows) >= max_flows:
                raise TooManyFlows(f"more than {max_flows} execution flows")
            flows.append(tuple(path))
            return
        for w in g.succs(v):
            path.append(w)
            walk(w)
            path.pop()

    walk(SOURCE)
    return tuple(flows)


def height(v: int, flows: Iterable) -> int:
    best = 0
    for flow in flows:
        if v in flow:
            best = max(best, len(flow) - flow.index(v))
    if best == 0:
        raise UnknownVertex(v)
    return best


def induced_subgraph(g: AlgorithmGraph, keep: Iterable) -> AlgorithmGraph:
    keep = frozenset(keep)
    missing = keep - set(g.vertices)
    if missing:
        raise UnknownVertex(sorted(missing))
    edges = set()
    for u in keep:
        seen = set()
        stack = list(g.succs(u))
        while stack:
            w = stack.pop()
            if w in seen:
                continue
            seen.add(w)
            if w in keep:
                edges.add((u, w))
            else:
                stack.extend(g.succs(w))
    extra = {e: b for e, b in g.extra_bits.items() if e in edges}
    specs = tuple(s for s in g.specs if s.id in keep)
    return AlgorithmGraph(specs=specs, edges=frozenset(edges), extra_bits=extra)
