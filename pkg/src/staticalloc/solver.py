"""Branch-and-bound search for the allocation closest to the origin in normalized
time-memory space, plus the communication-blind baseline, an exhaustive oracle,
and the staged procedure for heterogeneous robot classes.
"""
from __future__ import annotations

import itertools
import math
import time
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Optional

from .algograph import DEFAULT_MAX_FLOWS, SINK, SOURCE, VIRTUAL, AlgorithmGraph, induced_subgraph, lift_to_semilattice
from .architecture import Architecture, NodeClass
from .errors import ConfigError, Infeasible, OracleTooLarge
from .memmodel import ALGEBRA, SIMPLE_SUM, MemoryProfile, MemoryReport, memory_algebra, memory_report, relay_map
from .timemodel import Allocation, aggregate_time, edge_payload, uniform_allocation

TIE_RTOL = 1e-12


@dataclass(frozen=True)
class SolverConfig:
    time_weight: float = 1.0
    memory_weight: float = 1.0
    baseline_node_class: str = "cloud"
    prune: bool = True
    combine: str = SIMPLE_SUM
    relay_surcharge: bool = True
    oracle_cap: int = 10_000_000
    max_flows: int = DEFAULT_MAX_FLOWS
    optima_eps: Optional[float] = None

    def __post_init__(self):
        if self.time_weight < 0 or self.memory_weight < 0:
            raise ConfigError("objective weights must be >= 0")
        if self.baseline_node_class not in ("cloud", "fog"):
            raise ConfigError("baseline_node_class must be 'cloud' or 'fog'")
        if self.combine not in (SIMPLE_SUM, ALGEBRA):
            raise ConfigError(f"unknown combine mode {self.combine!r}")

    @classmethod
    def from_dict(cls, d: Mapping) -> "SolverConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown solver options: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class JointObjective:
    """Normalizers taken from the all-on-one-node baseline allocation."""

    time_norm: float
    mem_norm: float
    baseline_node_class: str
    baseline_node: int
    time_weight: float = 1.0
    memory_weight: float = 1.0
    returns: bool = True

    def distance(self, times: Iterable, mem: float) -> float:
        t2 = sum((t / self.time_norm) ** 2 for t in times)
        m2 = (mem / self.mem_norm) ** 2 if self.memory_weight else 0.0
        return math.sqrt(self.time_weight * t2 + self.memory_weight * m2)


@dataclass
class SolveResult:
    best_alloc: Allocation
    distance: float
    per_robot_times: dict
    memory_report: MemoryReport
    objective: JointObjective
    nodes_explored: int = 0
    pruned: int = 0
    leaves: int = 0
    wall_time: float = 0.0
    incumbent_trace: list = field(default_factory=list)
    optima: list = field(default_factory=list)
    method: str = "ours"
    stages: list = field(default_factory=list)

    def recompute_distance(self) -> float:
        return self.objective.distance(self.per_robot_times.values(), self.memory_report.max_usage)

    def summary(self, g: AlgorithmGraph, a: Architecture) -> dict:
        return {
            "method": self.method,
            "distance": self.distance,
            "allocation": {g.spec(v).label: a.node(k).label for v, k in sorted(self.best_alloc.assignment.items())},
            "per_robot_times": {a.node(e).label: t for e, t in self.per_robot_times.items()},
            "max_robot_memory": self.memory_report.max_usage,
            "time_norm": self.objective.time_norm,
            "mem_norm": self.objective.mem_norm,
            "nodes_explored": self.nodes_explored,
            "pruned": self.pruned,
            "wall_time_s": self.wall_time,
        }


def ensure_lifted(g: AlgorithmGraph) -> AlgorithmGraph:
    return g if g.is_lifted else lift_to_semilattice(g)


def _baseline_node(a: Architecture, cls: str) -> int:
    ids = a.ids_of(NodeClass(cls))
    if not ids:
        raise ConfigError(f"architecture has no {cls} node for the baseline allocation")
    return ids[0]


def joint_objective(g: AlgorithmGraph, a: Architecture, profile: MemoryProfile, cfg: SolverConfig,
                    robots: Optional[Sequence] = None, returns: bool = True,
                    memory_weight: Optional[float] = None) -> JointObjective:
    g = ensure_lifted(g)
    robots = tuple(a.edge_nodes if robots is None else robots)
    node = _baseline_node(a, cfg.baseline_node_class)
    base = uniform_allocation(g, node)
    t = aggregate_time(g, a, base, robots=robots, returns=returns, check=False).aggregate
    m = _memory(profile, base.assignment, robots, cfg, g, a).max_usage
    mw = cfg.memory_weight if memory_weight is None else memory_weight
    if t <= 0 or (mw and m <= 0):
        raise ConfigError("baseline allocation gives a zero normalizer; objective undefined")
    return JointObjective(time_norm=t, mem_norm=m if m > 0 else 1.0, baseline_node_class=cfg.baseline_node_class,
                          baseline_node=node, time_weight=cfg.time_weight, memory_weight=mw, returns=returns)


def _memory(profile, assignment, robots, cfg, g, a) -> MemoryReport:
    return memory_report(profile, assignment, robots, cfg.combine, g, a if cfg.relay_surcharge else None)


def _candidates(g: AlgorithmGraph, a: Architecture, restrict: Optional[frozenset]) -> dict:
    out = {}
    for v in g.algorithms:
        spec = g.spec(v)
        nodes = [n.id for n in a.nodes if spec.allows(n.id, n.cls.value) and (restrict is None or n.id in restrict)]
        if not nodes:
            raise Infeasible(f"algorithm {spec.label} has no allowed node")
        out[v] = nodes
    return out


def _ties(d: float, best: float) -> bool:
    return abs(d - best) <= TIE_RTOL * max(1.0, abs(best))


class _Search:
    """Depth-first branch and bound over algorithms in static (descending height) order.

    Every vertex's times depend only on vertices earlier in that order, so a
    partial assignment's per-robot times are already final; the latest finish
    per robot and the current robot memory are exact lower bounds.
    """

    def __init__(self, g, a, profile, cfg, objective, robots, restrict=None):
        self.g, self.a, self.profile, self.cfg, self.obj = g, a, profile, cfg, objective
        self.robots = tuple(robots)
        g.flows(cfg.max_flows)
        self.order = [v for v in g.static_order(cfg.max_flows) if v not in VIRTUAL]
        self.cands = _candidates(g, a, restrict)
        self.idx = a.index
        self.const, self.per_bit = a.transfer_table
        self.exec = {v: {k: g.spec(v).exec_on(k, a.node(k).cls.value) for k in self.cands[v]} for v in self.order}
        self.preds = {v: [(j, edge_payload(g, j, v), g.extra(j, v)) for j in g.preds(v)] for v in self.order + [SINK]}
        self.returns = objective.returns
        self.use_memory = objective.memory_weight > 0
        self.relays = relay_map(a) if cfg.relay_surcharge else {}
        self.item = {v: profile.item(v) for v in self.order}
        self.base_mem = {r: profile.to_total + profile.tm_of(r) for r in self.robots}
        self.wt2 = objective.time_weight / objective.time_norm ** 2
        self.wm2 = objective.memory_weight / objective.mem_norm ** 2 if self.use_memory else 0.0
        self.nodes_explored = 0
        self.pruned = 0
        self.leaves = 0
        self.best_key = None
        self.best = math.inf
        self.trace: list = []
        self.near: list = []

    def transfer(self, src, dst, bits):
        if src == dst:
            return 0.0
        i, j = self.idx[src], self.idx[dst]
        return self.const[i][j] + self.per_bit[i][j] * bits

    def seed(self, alloc: Optional[Allocation], distance: float):
        self.best = distance
        self.best_key = alloc.key() if alloc is not None else None
        self.trace.append(distance)

    def run(self):
        self.loc = {}
        self.finish = {e: {SOURCE: 0.0} for e in self.robots}
        self.free = {e: {} for e in self.robots}
        self.pmax = {e: 0.0 for e in self.robots}
        self.mem = dict(self.base_mem)
        self._walk(0)
        return self

    def _mem_value(self):
        if not self.use_memory:
            return 0.0
        if self.cfg.combine == SIMPLE_SUM:
            return max(self.mem.values(), default=0.0)
        vals = []
        for r in self.robots:
            mine = [v for v, k in self.loc.items() if k == r]
            body = memory_algebra(induced_subgraph(self.g, mine), self.profile) if mine else 0.0
            sur = sum(self.profile.external(v) for v, k in self.loc.items() if k in self.relays and r in self.relays[k])
            vals.append(self.base_mem[r] + body + sur)
        return max(vals, default=0.0)

    def _limit(self):
        eps = self.cfg.optima_eps or 0.0
        return self.best + eps + TIE_RTOL * max(1.0, abs(self.best))

    def _walk(self, depth):
        if depth == len(self.order):
            self._leaf()
            return
        v = self.order[depth]
        for k in self.cands[v]:
            self.nodes_explored += 1
            saved = self._place(v, k)
            t2 = sum(p * p for p in self.pmax.values())
            bound = math.sqrt(self.wt2 * t2 + self.wm2 * self._mem_value() ** 2)
            if self.cfg.prune and bound > self._limit():
                self.pruned += 1
            else:
                self._walk(depth + 1)
            self._unplace(v, k, saved)

    def _place(self, v, k):
        self.loc[v] = k
        saved_free, saved_pmax = {}, dict(self.pmax)
        r_vk = self.exec[v][k]
        for e in self.robots:
            fin = self.finish[e]
            ready = 0.0
            extra = 0.0
            for j, bits, xbits in self.preds[v]:
                there = e if j in VIRTUAL else self.loc[j]
                arrive = fin[j] + self.transfer(there, k, bits)
                if arrive > ready:
                    ready = arrive
                if xbits > 0:
                    extra += self.transfer(there, k, xbits)
            ready += extra
            free = self.free[e]
            saved_free[e] = free.get(k)
            s = max(ready, free.get(k, 0.0))
            f = s + r_vk
            fin[v] = f
            free[k] = f
            if f > self.pmax[e]:
                self.pmax[e] = f
        mem_delta = []
        if self.use_memory and self.cfg.combine == SIMPLE_SUM:
            if k in self.mem:
                self.mem[k] += self.item[v]
                mem_delta.append((k, self.item[v]))
            if k in self.relays:
                ext = self.profile.external(v)
                for r in self.relays[k]:
                    if r in self.mem:
                        self.mem[r] += ext
                        mem_delta.append((r, ext))
        return saved_free, saved_pmax, mem_delta

    def _unplace(self, v, k, saved):
        saved_free, saved_pmax, mem_delta = saved
        for e in self.robots:
            del self.finish[e][v]
            if saved_free[e] is None:
                del self.free[e][k]
            else:
                self.free[e][k] = saved_free[e]
        self.pmax = saved_pmax
        for r, d in mem_delta:
            self.mem[r] -= d
        del self.loc[v]

    def _finals(self):
        out = {}
        for e in self.robots:
            fin = self.finish[e]
            ready = 0.0
            extra = 0.0
            for j, bits, xbits in self.preds[SINK]:
                there = e if j in VIRTUAL else self.loc[j]
                arrive = fin[j] + (self.transfer(there, e, bits) if self.returns else 0.0)
                if arrive > ready:
                    ready = arrive
                if xbits > 0:
                    extra += self.transfer(there, e, xbits)
            out[e] = ready + extra
        return out

    def _leaf(self):
        self.leaves += 1
        finals = self._finals()
        t2 = sum(t * t for t in finals.values())
        d = math.sqrt(self.wt2 * t2 + self.wm2 * self._mem_value() ** 2)
        key = tuple(sorted(self.loc.items()))
        if self.cfg.optima_eps is not None and d <= self._limit():
            self.near.append((d, key))
        if d < self.best and not _ties(d, self.best):
            self.best, self.best_key = d, key
            self.trace.append(d)
        elif _ties(d, self.best) and (self.best_key is None or key < self.best_key):
            self.best_key = key
            if d < self.best:
                self.best = d
            self.trace.append(self.best)


def _finish_result(g, a, profile, cfg, objective, robots, key, method, check=True) -> SolveResult:
    alloc = Allocation(dict(key))
    times = aggregate_time(g, a, alloc, robots=robots, returns=objective.returns, check=check).per_robot_final
    mem = _memory(profile, alloc.assignment, robots, cfg, g, a)
    return SolveResult(
        best_alloc=alloc,
        distance=objective.distance(times.values(), mem.max_usage),
        per_robot_times=dict(times),
        memory_report=mem,
        objective=objective,
        method=method,
    )


def _run_search(g, a, profile, cfg, objective, robots, restrict, method) -> SolveResult:
    started = time.perf_counter()
    search = _Search(g, a, profile, cfg, objective, robots, restrict)
    base = uniform_allocation(g, objective.baseline_node)
    if all(objective.baseline_node in search.cands[v] for v in g.algorithms):
        times = aggregate_time(g, a, base, robots=robots, returns=objective.returns).per_robot_final
        mem = _memory(profile, base.assignment, robots, cfg, g, a) if objective.memory_weight else None
        search.seed(base, objective.distance(times.values(), mem.max_usage if mem else 0.0))
    else:
        search.seed(None, math.inf)
    search.run()
    if search.best_key is None:
        raise Infeasible("no feasible allocation")
    result = _finish_result(g, a, profile, cfg, objective, robots, search.best_key, method)
    result.nodes_explored = search.nodes_explored
    result.pruned = search.pruned
    result.leaves = search.leaves
    result.incumbent_trace = search.trace
    if cfg.optima_eps is not None:
        lim = search.best + cfg.optima_eps + TIE_RTOL * max(1.0, search.best)
        result.optima = sorted({k for d, k in search.near if d <= lim})
        if not result.optima:
            result.optima = [search.best_key]
    result.wall_time = time.perf_counter() - started
    return result


def solve(g: AlgorithmGraph, a: Architecture, profile: MemoryProfile, cfg: Optional[SolverConfig] = None,
          rng_seed: Optional[int] = None, robots: Optional[Sequence] = None,
          restrict: Optional[Iterable] = None) -> SolveResult:
    """Global optimum of the normalized time-memory distance under expected link times.

    The search is deterministic; ``rng_seed`` is accepted for interface symmetry
    with sampled evaluation and does not influence the result.
    """
    cfg = cfg or SolverConfig()
    g = ensure_lifted(g)
    robots = tuple(a.edge_nodes if robots is None else robots)
    objective = joint_objective(g, a, profile, cfg, robots)
    restrict = frozenset(restrict) if restrict is not None else None
    return _run_search(g, a, profile, cfg, objective, robots, restrict, "ours")


def solve_baseline_li2018(g: AlgorithmGraph, a: Architecture, profile: MemoryProfile,
                          cfg: Optional[SolverConfig] = None, rng_seed: Optional[int] = None,
                          robots: Optional[Sequence] = None) -> SolveResult:
    """Search under a memory-blind objective that skips returning results to the
    requesting robot, then re-score the pick under the full objective."""
    cfg = cfg or SolverConfig()
    g = ensure_lifted(g)
    robots = tuple(a.edge_nodes if robots is None else robots)
    internal = joint_objective(g, a, profile, cfg, robots, returns=False, memory_weight=0.0)
    inner = _run_search(g, a, profile, cfg, internal, robots, None, "baseline-internal")
    full = joint_objective(g, a, profile, cfg, robots)
    result = _finish_result(g, a, profile, cfg, full, robots, inner.best_alloc.key(), "baseline")
    result.nodes_explored = inner.nodes_explored
    result.pruned = inner.pruned
    result.leaves = inner.leaves
    result.incumbent_trace = inner.incumbent_trace
    result.wall_time = inner.wall_time
    result.stages = [{"internal_distance": inner.distance}]
    return result


def enumerate_oracle(g: AlgorithmGraph, a: Architecture, profile: MemoryProfile,
                     cfg: Optional[SolverConfig] = None, robots: Optional[Sequence] = None,
                     baseline_objective: bool = False) -> SolveResult:
    """Exhaustive evaluation of every feasible allocation with the reference evaluator."""
    cfg = cfg or SolverConfig()
    g = ensure_lifted(g)
    robots = tuple(a.edge_nodes if robots is None else robots)
    if baseline_objective:
        objective = joint_objective(g, a, profile, cfg, robots, returns=False, memory_weight=0.0)
    else:
        objective = joint_objective(g, a, profile, cfg, robots)
    algs = list(g.algorithms)
    cands = _candidates(g, a, None)
    space = math.prod(len(cands[v]) for v in algs)
    if space > cfg.oracle_cap:
        raise OracleTooLarge(f"{space} allocations exceed the oracle cap {cfg.oracle_cap}")
    started = time.perf_counter()
    best, best_key, count = math.inf, None, 0
    for combo in itertools.product(*(cands[v] for v in algs)):
        count += 1
        alloc = Allocation(dict(zip(algs, combo)))
        times = aggregate_time(g, a, alloc, robots=robots, returns=objective.returns).per_robot_final
        mem = _memory(profile, alloc.assignment, robots, cfg, g, a).max_usage if objective.memory_weight else 0.0
        d = objective.distance(times.values(), mem)
        key = alloc.key()
        if best_key is None or (d < best and not _ties(d, best)) or (_ties(d, best) and key < best_key):
            best, best_key = min(d, best), key
    result = _finish_result(g, a, profile, cfg, objective, robots, best_key, "oracle")
    result.leaves = count
    result.wall_time = time.perf_counter() - started
    return result


def evaluate(g: AlgorithmGraph, a: Architecture, profile: MemoryProfile, alloc: Allocation,
             cfg: Optional[SolverConfig] = None, objective: Optional[JointObjective] = None,
             check: bool = True) -> SolveResult:
    """Score a given allocation under the full objective."""
    cfg = cfg or SolverConfig()
    g = ensure_lifted(g)
    robots = a.edge_nodes
    objective = objective or joint_objective(g, a, profile, cfg, robots)
    return _finish_result(g, a, profile, cfg, objective, robots, alloc.key(), "evaluate", check)


def solve_heterogeneous(g: AlgorithmGraph, a: Architecture, profile: MemoryProfile,
                        classes: Sequence, algo_usage: Mapping, cfg: Optional[SolverConfig] = None,
                        rng_seed: Optional[int] = None) -> SolveResult:
    """Staged allocation when robots fall into classes of identical machines.

    Stage s visits every combination of s classes (in index order) and solves
    for the not yet allocated algorithms used by all classes in the combination,
    over those classes' robots plus every non-robot node. Algorithms no class
    uses are solved last over the whole network.
    """
    cfg = cfg or SolverConfig()
    g = ensure_lifted(g)
    classes = [frozenset(c) for c in classes]
    edges = set(a.edge_nodes)
    seen = set()
    for c in classes:
        if c & seen:
            raise ConfigError("robot classes overlap")
        seen |= c
    if seen != edges:
        raise ConfigError("robot classes must cover every edge node exactly once")
    usage = {i: frozenset(algo_usage.get(i, ())) for i in range(len(classes))}
    others = frozenset(n.id for n in a.nodes if n.cls != NodeClass.EDGE)
    started = time.perf_counter()
    assignment: dict = {}
    stages = []
    explored = pruned = leaves = 0

    def run_stage(algs, robots):
        nonlocal explored, pruned, leaves
        sub = lift_to_semilattice(induced_subgraph(g, algs))
        robots = tuple(sorted(robots))
        res = solve(sub, a, profile, cfg, robots=robots, restrict=others | set(robots))
        assignment.update(res.best_alloc.assignment)
        explored += res.nodes_explored
        pruned += res.pruned
        leaves += res.leaves
        stages.append({"algorithms": sorted(algs), "robots": list(robots), "distance": res.distance})

    for size in range(1, len(classes) + 1):
        for combo in itertools.combinations(range(len(classes)), size):
            common = frozenset.intersection(*(usage[i] for i in combo)) - set(assignment)
            common = frozenset(v for v in common if v in g and v not in VIRTUAL)
            if common:
                run_stage(common, frozenset().union(*(classes[i] for i in combo)))
    rest = [v for v in g.algorithms if v not in assignment]
    if rest:
        run_stage(frozenset(rest), edges)
    objective = joint_objective(g, a, profile, cfg)
    result = _finish_result(g, a, profile, cfg, objective, a.edge_nodes, tuple(sorted(assignment.items())),
                            "heterogeneous")
    result.nodes_explored, result.pruned, result.leaves = explored, pruned, leaves
    result.stages = stages
    result.wall_time = time.perf_counter() - started
    return result
