"""Bundled measurement data and small worked instances."""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

from .algograph import AlgorithmGraph
from .architecture import Architecture, LinkParams, NodeClass, build_architecture, standard_nodes
from .errors import ConfigError
from .io import architecture_from_dict, graph_from_dict, link_table_from_dict, read_json
from .memmodel import MemoryProfile

PAPER = "paper"
ITEM_BASE = 2  # first non-virtual vertex id


def _bundled(name: str) -> dict:
    return json.loads(resources.files("staticalloc.data").joinpath(name).read_text())


@dataclass(frozen=True)
class Dataset:
    name: str
    graph: AlgorithmGraph
    link_table: dict

    def profile(self, tm: Optional[dict] = None) -> MemoryProfile:
        return MemoryProfile.from_graph(self.graph, tm)


def paper_link_table() -> dict:
    return link_table_from_dict(_bundled("paper_tab2p.json"))


def paper_graph() -> AlgorithmGraph:
    """Seven measured algorithms (ids 2..8 for A1..A7) and their dependencies."""
    return graph_from_dict(_bundled("paper_tab3p.json"))


def paper_ids() -> dict:
    return {s.name: s.id for s in paper_graph().specs}


def load_dataset(ref: str = PAPER) -> Dataset:
    """``"paper"`` or a directory holding ``algorithms.json`` and ``links.json``."""
    if ref == PAPER:
        return Dataset(PAPER, paper_graph(), paper_link_table())
    root = Path(ref)
    if not root.is_dir():
        raise ConfigError(f"dataset {ref!r} is neither 'paper' nor a directory")
    return Dataset(
        root.name,
        graph_from_dict(read_json(root / "algorithms.json")),
        link_table_from_dict(read_json(root / "links.json")),
    )


def chain_architecture(n_edge: int = 1, table: Optional[dict] = None) -> Architecture:
    """Every robot linked to the fog, the fog linked to the cloud."""
    table = table or paper_link_table()
    nodes = standard_nodes(n_edge)
    fog, cloud = n_edge, n_edge + 1
    return build_architecture(nodes, [(fog, cloud)] + [(e, fog) for e in range(n_edge)], table)


def zero_link_table() -> dict:
    z = LinkParams(0.0)
    return {(s, t): z for s in NodeClass for t in NodeClass}


@dataclass(frozen=True)
class MemoryInstance:
    names: tuple          # item labels, in id order
    values: tuple         # MB per item
    restricted: frozenset  # item ids fed from fog/cloud
    robots: tuple
    tr0: frozenset
    reported_loads: dict
    reported_max: float

    # item ids start after the two virtual vertices so reports never drop them
    @property
    def ids(self) -> tuple:
        return tuple(range(ITEM_BASE, ITEM_BASE + len(self.names)))

    @property
    def unrestricted(self) -> frozenset:
        return frozenset(self.ids) - self.restricted

    def id_of(self, name: str) -> int:
        return ITEM_BASE + self.names.index(name)

    def name_of(self, item: int) -> str:
        return self.names[item - ITEM_BASE]

    def value_of(self, item: int) -> float:
        return self.values[item - ITEM_BASE]

    def profile(self) -> MemoryProfile:
        """Each item's whole footprint as processing memory."""
        return MemoryProfile(m_pr=dict(zip(self.ids, self.values)))


def memory_instance_from_dict(d: dict) -> MemoryInstance:
    """Item sizes, the fog/cloud-fed items, robots and the fog-linked robots."""
    try:
        return _memory_instance(d)
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad memory instance: {exc}") from None


def memory_example() -> MemoryInstance:
    return memory_instance_from_dict(_bundled("memory_example.json"))


def _memory_instance(d: dict) -> MemoryInstance:
    names = tuple(d["items"])
    idx = {n: ITEM_BASE + i for i, n in enumerate(names)}
    robots = tuple(d["robots"])
    return MemoryInstance(
        names=names,
        values=tuple(float(d["items"][n]) for n in names),
        restricted=frozenset(idx[n] for n in d["restricted"]),
        robots=robots,
        tr0=frozenset(robots.index(r) for r in d["tr0"]),
        reported_loads={robots.index(r): float(v) for r, v in d.get("reported_loads", {}).items()},
        reported_max=float(d.get("reported_max", "nan")),
    )


def timing_example() -> tuple:
    """(graph, architecture) for the three-robot instance with unit link costs."""
    d = _bundled("timing_example.json")
    return graph_from_dict(d), architecture_from_dict(d["architecture"])
