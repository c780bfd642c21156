"""Recursive response-time model for a fixed allocation.

For every algorithm ``i`` hosted on node ``k`` and one initiating robot:

* ready time  = max over predecessors ``j`` of (finish of ``j`` + transfer of
  ``j``'s output to ``k``) + sum of transfers of any extra per-edge data;
* start       = max(ready time, end of the previous algorithm on ``k``);
* finish      = start + run time of ``i`` on ``k``.

The virtual top and bottom sit on the initiating robot. The top's outgoing
transfers carry the child's internal input (the request); the bottom's ready
time is the robot's final response time. Algorithms sharing a node run in the
graph's static order (descending height, then id), which is a fixed topological
order, so every time is a max-plus expression of its predecessors in that
order. That makes evaluation of any order-prefix exact and monotone.
"""
from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .algograph import SINK, SOURCE, VIRTUAL, AlgorithmGraph
from .architecture import Architecture, NodeClass
from .errors import ConstraintViolation, InvalidPrefix, UnknownVertex


@dataclass(frozen=True)
class Allocation:
    """Total map from non-virtual algorithm ids to node ids."""

    assignment: Mapping
    initiator: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(
            self, "assignment", {int(k): int(v) for k, v in self.assignment.items() if int(k) not in VIRTUAL}
        )

    def __getitem__(self, algorithm: int) -> int:
        return self.assignment[algorithm]

    def key(self) -> tuple:
        return tuple(sorted(self.assignment.items()))

    def on(self, node: int) -> frozenset:
        return frozenset(a for a, n in self.assignment.items() if n == node)


def uniform_allocation(g: AlgorithmGraph, node: int) -> Allocation:
    return Allocation({v: node for v in g.algorithms})


def check_allocation(g: AlgorithmGraph, a: Architecture, alloc: Mapping, partial: bool = False):
    for v, k in alloc.items():
        if v in VIRTUAL:
            continue
        spec = g.spec(v)
        if k not in a:
            raise UnknownVertex(f"algorithm {spec.label} mapped to unknown node {k}")
        node = a.node(k)
        if not spec.allows(k, node.cls.value):
            raise ConstraintViolation(f"algorithm {spec.label} is not allowed on node {node.label}")
    if not partial:
        missing = [v for v in g.algorithms if v not in alloc]
        if missing:
            raise ConstraintViolation(f"algorithms without a node: {missing}")


def _check_initiator(a: Architecture, initiator: int):
    if a.node(initiator).cls != NodeClass.EDGE:
        raise ConstraintViolation(f"initiator {initiator} is not an edge node")


@dataclass(frozen=True)
class TimeReport:
    """Per-robot final response times and their Euclidean aggregate.

    ``per_algorithm`` and ``schedule`` are filled for single-robot reports;
    aggregate reports keep the single-robot reports in ``by_robot``.
    """

    per_robot_final: Mapping
    aggregate: float
    per_algorithm: Mapping = field(default_factory=dict)
    schedule: Mapping = field(default_factory=dict)
    by_robot: Mapping = field(default_factory=dict)


def _transfer_fn(a: Architecture, mode: str, rng: Optional[np.random.Generator]) -> Callable:
    if mode == "expected":
        const, per_bit = a.transfer_table
        idx = a.index

        def expected(src, dst, bits):
            if src == dst:
                return 0.0
            i, j = idx[src], idx[dst]
            return const[i][j] + per_bit[i][j] * bits

        return expected
    if mode == "sampled":
        if rng is None:
            raise ValueError("sampled mode needs an rng")

        def sampled(src, dst, bits):
            if src == dst:
                return 0.0
            return a.sample_transfer(src, dst, bits, rng)

        return sampled
    raise ValueError(f"unknown mode {mode!r}")


def edge_payload(g: AlgorithmGraph, j: int, i: int) -> float:
    """Bits carried on dependency edge j -> i before any extra data."""
    if j == SOURCE:
        return g.spec(i).input_internal_bits
    return g.spec(j).output_bits


def _run(g: AlgorithmGraph, a: Architecture, assignment: Mapping, initiator: int, transfer: Callable,
         include: Optional[frozenset] = None, returns: bool = True):
    """Forward pass in static order over the vertices in ``include`` (all if None)."""
    start: dict = {}
    finish: dict = {}
    node_free: dict = {}
    schedule: dict = {}
    for v in g.static_order():
        if include is not None and v not in include:
            continue
        if v == SOURCE:
            start[v] = finish[v] = 0.0
            continue
        here = initiator if v in VIRTUAL else assignment[v]
        ready = 0.0
        extra = 0.0
        for j in g.preds(v):
            there = initiator if j in VIRTUAL else assignment[j]
            if v == SINK and not returns:
                arrive = finish[j]
            else:
                arrive = finish[j] + transfer(there, here, edge_payload(g, j, v))
            ready = max(ready, arrive)
            bits = g.extra(j, v)
            if bits > 0:
                extra += transfer(there, here, bits)
        ready += extra
        if v == SINK:
            start[v] = finish[v] = ready
            continue
        s = max(ready, node_free.get(here, 0.0))
        node = a.node(here)
        f = s + g.spec(v).exec_on(here, node.cls.value)
        start[v], finish[v] = s, f
        node_free[here] = f
        schedule.setdefault(here, []).append(v)
    return start, finish, schedule


def response_time(g: AlgorithmGraph, a: Architecture, alloc: Allocation, initiator: int,
                  mode: str = "expected", rng: Optional[np.random.Generator] = None,
                  returns: bool = True, check: bool = True) -> TimeReport:
    """Single-robot report; ``returns=False`` drops the final hop back to the robot.

    ``check=False`` skips the allowed-node test (used for reference allocations).
    """
    _check_initiator(a, initiator)
    if check:
        check_allocation(g, a, alloc.assignment)
    start, finish, schedule = _run(g, a, alloc.assignment, initiator, _transfer_fn(a, mode, rng), returns=returns)
    final = finish[SINK]
    return TimeReport(
        per_robot_final={initiator: final},
        aggregate=final,
        per_algorithm={v: (start[v], finish[v]) for v in start},
        schedule={k: tuple(vs) for k, vs in schedule.items()},
    )


def aggregate_time(g: AlgorithmGraph, a: Architecture, alloc: Allocation, mode: str = "expected",
                   rng: Optional[np.random.Generator] = None, robots: Optional[Iterable] = None,
                   returns: bool = True, check: bool = True) -> TimeReport:
    robots = tuple(a.edge_nodes if robots is None else robots)
    streams = rng.spawn(len(robots)) if (mode == "sampled" and rng is not None) else [rng] * len(robots)
    reports = {e: response_time(g, a, alloc, e, mode, s, returns, check) for e, s in zip(robots, streams)}
    finals = {e: r.aggregate for e, r in reports.items()}
    return TimeReport(
        per_robot_final=finals,
        aggregate=math.sqrt(sum(t * t for t in finals.values())),
        by_robot=reports,
    )


def partial_time(g: AlgorithmGraph, a: Architecture, partial_alloc: Mapping, mode: str = "expected",
                 robots: Optional[Iterable] = None, per_robot: bool = False):
    """Lower bound on the aggregate time from a predecessor-closed partial allocation.

    Each robot's value is the latest finish among evaluated vertices; the
    virtual vertices join as soon as all their predecessors are allocated.
    """
    if mode != "expected":
        raise ValueError("partial_time is defined for expected mode only")
    check_allocation(g, a, partial_alloc, partial=True)
    have = {int(v) for v in partial_alloc if int(v) not in VIRTUAL} | {SOURCE}
    for v in list(have):
        open_preds = [j for j in g.preds(v) if j not in have]
        if open_preds:
            raise InvalidPrefix(f"algorithm {v} allocated before its predecessors {open_preds}")
    if all(j in have for j in g.preds(SINK)):
        have.add(SINK)
    robots = tuple(a.edge_nodes if robots is None else robots)
    transfer = _transfer_fn(a, mode, None)
    values = {}
    for e in robots:
        _check_initiator(a, e)
        _, finish, _ = _run(g, a, partial_alloc, e, transfer, include=frozenset(have))
        values[e] = max(finish.values())
    agg = math.sqrt(sum(t * t for t in values.values()))
    return (agg, values) if per_robot else agg
