"""Robot memory usage, the serial/parallel memory algebra, and memory balancing."""
from __future__ import annotations

import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Optional

from .algograph import VIRTUAL, AlgorithmGraph, induced_subgraph
from .architecture import Architecture, NodeClass, RobotPartition, partition_robots
from .errors import InfeasibleMemoryPlacement

SIMPLE_SUM = "simple_sum"
ALGEBRA = "algebra"
EXACT_LIMIT = 20


@dataclass(frozen=True)
class MemoryProfile:
    """Memory figures in bytes, keyed by algorithm id (``tm`` keyed by robot id)."""

    m_pr: Mapping
    m_in_external: Mapping = field(default_factory=dict)
    m_in_internal: Mapping = field(default_factory=dict)
    m_ou: Mapping = field(default_factory=dict)
    tm: Mapping = field(default_factory=dict)

    def __post_init__(self):
        for name in ("m_pr", "m_in_external", "m_in_internal", "m_ou", "tm"):
            if any(v < 0 for v in getattr(self, name).values()):
                raise ValueError(f"{name} values must be >= 0")

    @classmethod
    def from_graph(cls, g: AlgorithmGraph, tm: Optional[Mapping] = None) -> "MemoryProfile":
        algs = [g.spec(v) for v in g.algorithms]
        return cls(
            m_pr={s.id: s.processing_bytes for s in algs},
            m_in_external={s.id: s.input_external_bits / 8 for s in algs},
            m_in_internal={s.id: s.input_internal_bits / 8 for s in algs},
            m_ou={s.id: s.output_bits / 8 for s in algs},
            tm=dict(tm or {}),
        )

    @property
    def to_total(self) -> float:
        return float(sum(self.m_ou.values()))

    def tm_of(self, robot: int) -> float:
        return self.tm.get(robot, 0.0)

    def external(self, v: int) -> float:
        return self.m_in_external.get(v, 0.0)

    def item(self, v: int) -> float:
        """Processing plus all input memory of one algorithm."""
        return self.m_pr.get(v, 0.0) + self.m_in_external.get(v, 0.0) + self.m_in_internal.get(v, 0.0)


@dataclass(frozen=True)
class MemoryReport:
    per_robot: Mapping
    max_usage: float
    total: float
    variance_term: float


def relay_map(a: Architecture, partition: Optional[RobotPartition] = None) -> dict:
    """For each robot without a fog link, the linked robots relaying fog/cloud input to it."""
    partition = partition or partition_robots(a)
    sources = a.fog_nodes or tuple(n.id for n in a.nodes if n.cls != NodeClass.EDGE)
    relays = {}
    for r in partition.tr_inf:
        if not sources:
            relays[r] = ()
            continue
        src = min(sources, key=lambda s: (a.expected_transfer(s, r, 0.0), s))
        hops = a.route(src, r)
        relays[r] = tuple(h.dst for h in hops[:-1] if h.dst in partition.tr0)
    return relays


def memory_algebra(g_induced: AlgorithmGraph, profile: MemoryProfile) -> float:
    """Peak processing memory (serial -> max, parallel -> sum) plus disjoint fog/cloud inputs.

    The peak is the heaviest antichain of the reachability order: algorithms on
    a common directed path never hold processing memory at the same time.
    """
    verts = [v for v in g_induced.vertices if v not in VIRTUAL]
    inputs = sum(profile.external(v) for v in verts)
    weight = {v: profile.m_pr.get(v, 0.0) for v in verts}
    verts.sort(key=lambda v: (-weight[v], v))
    conflicts = {v: frozenset(w for w in verts if w != v and g_induced.comparable(v, w)) for v in verts}
    memo: dict = {}

    def best(rest: frozenset) -> float:
        if not rest:
            return 0.0
        if rest in memo:
            return memo[rest]
        v = next(u for u in verts if u in rest)
        take = weight[v] + best(rest - conflicts[v] - {v})
        skip = best(rest - {v}) if conflicts[v] & rest else -math.inf
        memo[rest] = max(take, skip)
        return memo[rest]

    return best(frozenset(verts)) + inputs


def robot_memory(profile: MemoryProfile, assignment: Mapping, robot: int, combine: str = SIMPLE_SUM,
                 g: Optional[AlgorithmGraph] = None, arch: Optional[Architecture] = None,
                 relays: Optional[Mapping] = None) -> float:
    """Memory use of one robot; ``arch`` (or precomputed ``relays``) enables relay surcharges."""
    mine = [v for v, k in assignment.items() if k == robot and v not in VIRTUAL]
    base = profile.to_total + profile.tm_of(robot)
    if combine == SIMPLE_SUM:
        body = sum(profile.item(v) for v in mine)
    elif combine == ALGEBRA:
        if g is None:
            raise ValueError("algebra mode needs the algorithm graph")
        body = memory_algebra(induced_subgraph(g, mine), profile)
    else:
        raise ValueError(f"unknown combine mode {combine!r}")
    if relays is None and arch is not None:
        relays = relay_map(arch)
    surcharge = 0.0
    if relays:
        for v, k in assignment.items():
            if k in relays and robot in relays[k]:
                surcharge += profile.external(v)
    return base + body + surcharge


def memory_report(profile: MemoryProfile, assignment: Mapping, robots: Iterable, combine: str = SIMPLE_SUM,
                  g: Optional[AlgorithmGraph] = None, arch: Optional[Architecture] = None) -> MemoryReport:
    relays = relay_map(arch) if arch is not None else None
    per_robot = {r: robot_memory(profile, assignment, r, combine, g, relays=relays) for r in robots}
    total = sum(per_robot.values())
    k = len(per_robot)
    mean = total / k if k else 0.0
    return MemoryReport(
        per_robot=per_robot,
        max_usage=max(per_robot.values(), default=0.0),
        total=total,
        variance_term=sum((m - mean) ** 2 for m in per_robot.values()),
    )


# --- balancing ---------------------------------------------------------------

def lpt(values: Sequence, bins: int, initial_loads: Optional[Sequence] = None) -> list:
    """Largest value first into the least-loaded bin (lowest index on ties)."""
    loads = list(initial_loads) if initial_loads is not None else [0.0] * bins
    out = [0] * len(values)
    for i in sorted(range(len(values)), key=lambda i: (-values[i], i)):
        b = min(range(bins), key=lambda j: (loads[j], j))
        out[i] = b
        loads[b] += values[i]
    return out


def _water_fill_bound(loads: Sequence, remaining: float) -> float:
    """Least possible sum of squared loads after spreading ``remaining`` continuously."""
    if remaining <= 0:
        return sum(x * x for x in loads)
    xs = sorted(loads)
    acc = 0.0
    for i, x in enumerate(xs):
        acc += x
        level = (acc + remaining) / (i + 1)
        if i + 1 == len(xs) or level <= xs[i + 1]:
            return (i + 1) * level * level + sum(y * y for y in xs[i + 1:])
    raise AssertionError("unreachable")


class _Exact:
    def __init__(self, values, bins, initial, enumerate_all=False):
        self.values = list(values)
        self.bins = bins
        self.initial = list(initial)
        self.order = sorted(range(len(values)), key=lambda i: (-values[i], i))
        self.suffix = [0.0] * (len(values) + 1)
        for pos in range(len(self.order) - 1, -1, -1):
            self.suffix[pos] = self.suffix[pos + 1] + values[self.order[pos]]
        scale = max([abs(x) for x in self.values + self.initial] + [1.0])
        self.tol = 1e-9 * scale * scale * max(bins, 1)
        self.enumerate_all = enumerate_all
        self.best_key = None
        self.best = None
        self.optima: list = []

    def run(self):
        self._walk(0, list(self.initial), [0] * len(self.values))
        return self

    def _key(self, loads, assign):
        return (sum(x * x for x in loads), max(loads), tuple(assign))

    def _walk(self, pos, loads, assign):
        if pos == len(self.order):
            key = self._key(loads, assign)
            if self.enumerate_all:
                if self.best_key is None or key[0] < self.best_key[0] - self.tol:
                    self.best_key, self.optima = key, [tuple(assign)]
                elif abs(key[0] - self.best_key[0]) <= self.tol:
                    self.optima.append(tuple(assign))
                return
            if self.best_key is None or self._better(key, self.best_key):
                self.best_key, self.best = key, list(assign)
            return
        if self.best_key is not None:
            bound = _water_fill_bound(loads, self.suffix[pos])
            if bound > self.best_key[0] + self.tol:
                return
        i = self.order[pos]
        seen = set()
        for b in range(self.bins):
            if not self.enumerate_all:
                if loads[b] in seen:
                    continue
                seen.add(loads[b])
            loads[b] += self.values[i]
            assign[i] = b
            self._walk(pos + 1, loads, assign)
            loads[b] -= self.values[i]

    def _better(self, key, best):
        if key[0] < best[0] - self.tol:
            return True
        if key[0] > best[0] + self.tol:
            return False
        return key[1:] < best[1:]


def balance(values: Sequence, bins: int, initial_loads: Optional[Sequence] = None, method: str = "auto") -> list:
    """Assign each value to a bin; returns the bin index per value.

    ``exact`` minimises the variance of the final bin loads (ties: smaller max
    load, then lexicographic assignment); ``lpt`` is the greedy; ``auto`` uses
    exact up to 20 values.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    initial = list(initial_loads) if initial_loads is not None else [0.0] * bins
    if len(initial) != bins:
        raise ValueError("initial_loads must have one entry per bin")
    if method == "auto":
        method = "exact" if len(values) <= EXACT_LIMIT else "lpt"
    if method == "lpt":
        return lpt(values, bins, initial)
    if method != "exact":
        raise ValueError(f"unknown balance method {method!r}")
    if not values:
        return []
    return _Exact(values, bins, initial).run().best


def equivalent_optima(values: Sequence, bins: int, initial_loads: Optional[Sequence] = None) -> list:
    """Every assignment reaching the minimum variance (no symmetry reduction)."""
    initial = list(initial_loads) if initial_loads is not None else [0.0] * bins
    if not values:
        return [()]
    return _Exact(values, bins, initial, enumerate_all=True).run().optima


def bin_loads(values: Sequence, assignment: Sequence, bins: int, initial_loads: Optional[Sequence] = None) -> list:
    loads = list(initial_loads) if initial_loads is not None else [0.0] * bins
    for v, b in zip(values, assignment):
        loads[b] += v
    return loads


def variance(xs: Sequence) -> float:
    if not xs:
        return 0.0
    m = sum(xs) / len(xs)
    return sum((x - m) ** 2 for x in xs) / len(xs)


@dataclass(frozen=True)
class BalanceResult:
    assignment: Mapping  # algorithm id -> robot id
    loads: Mapping       # robot id -> bytes, including output store and overhead
    stage1_loads: Mapping


def balance_restricted(profile: MemoryProfile, partition: RobotPartition, restricted: Iterable,
                       unrestricted: Iterable, method: str = "auto") -> BalanceResult:
    """Two-stage balancing: fog/cloud-fed algorithms over fog-linked robots first,
    then the rest over every robot with the first stage's loads as priors."""
    restricted = sorted(restricted)
    unrestricted = sorted(unrestricted)
    tr0 = sorted(partition.tr0)
    robots = sorted(partition.tr0 | partition.tr_inf)
    if restricted and not tr0:
        raise InfeasibleMemoryPlacement("fog/cloud-fed algorithms need a robot with a fog link")
    base = {r: profile.to_total + profile.tm_of(r) for r in robots}
    assignment = {}
    if restricted:
        vals = [profile.item(v) for v in restricted]
        picks = balance(vals, len(tr0), [base[r] for r in tr0], method)
        for v, b in zip(restricted, picks):
            assignment[v] = tr0[b]
    stage1 = dict(base)
    for v, r in assignment.items():
        stage1[r] += profile.item(v)
    vals = [profile.item(v) for v in unrestricted]
    picks = balance(vals, len(robots), [stage1[r] for r in robots], method) if robots else []
    loads = dict(stage1)
    for v, b in zip(unrestricted, picks):
        assignment[v] = robots[b]
        loads[robots[b]] += profile.item(v)
    return BalanceResult(assignment=assignment, loads=loads, stage1_loads=stage1)
