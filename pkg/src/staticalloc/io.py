"""JSON documents for algorithm graphs, architectures, link tables and configs.

Algorithm document::

    {"algorithms": [{"id": 2, "name": "A1",
                     "exec_time": {"edge": 0.4, "fog": 0.1, "cloud": 0.05, "7": 0.2},
                     "input_internal_bits": 0, "input_external_bits": 0,
                     "output_bits": 0, "processing_bytes": 0,
                     "allowed": ["cloud", 3]}],
     "edges": [[2, 3], [3, 4, 1024]]}

``exec_time`` keys are class names or node ids; an optional third edge entry
is extra per-edge data in bits. Architecture document::

    {"nodes": [{"id": 0, "class": "edge", "name": "R1", "tm_bytes": 0}],
     "links": [{"src": 0, "dst": 1, "base_latency_s": 0.1, "fn_mu": 0,
                "fn_sigma": 0, "per_bit_cost": 0}]}

``undirected_links`` plus a single ``link`` entry may replace ``links``.
"""
from __future__ import annotations

import json
from collections.abc import Mapping
from pathlib import Path
from typing import Union

from .algograph import AlgorithmGraph, AlgorithmSpec
from .architecture import Architecture, LinkModel, LinkParams, Node, NodeClass
from .errors import ConfigError

PathLike = Union[str, Path]


def read_json(path: PathLike) -> dict:
    path = Path(path)
    try:
        with path.open() as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"{path}: file not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None


def write_json(obj, path: PathLike):
    path = Path(path)
    try:
        path.write_text(json.dumps(obj, indent=2, sort_keys=False) + "\n")
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror}") from exc


def _node_key(k):
    if isinstance(k, str) and k.lstrip("-").isdigit():
        return int(k)
    return k


def spec_from_dict(d: Mapping) -> AlgorithmSpec:
    try:
        allowed = d.get("allowed")
        return AlgorithmSpec(
            id=int(d["id"]),
            name=str(d.get("name", "")),
            exec_time={_node_key(k): float(v) for k, v in d.get("exec_time", {}).items()},
            input_internal_bits=float(d.get("input_internal_bits", 0)),
            input_external_bits=float(d.get("input_external_bits", 0)),
            output_bits=float(d.get("output_bits", 0)),
            processing_bytes=float(d.get("processing_bytes", 0)),
            allowed=None if allowed is None else frozenset(_node_key(x) for x in allowed),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad algorithm entry {dict(d)!r}: {exc}") from None


def spec_to_dict(s: AlgorithmSpec) -> dict:
    out = {
        "id": s.id,
        "name": s.name,
        "exec_time": {str(k): v for k, v in s.exec_time.items()},
        "input_internal_bits": s.input_internal_bits,
        "input_external_bits": s.input_external_bits,
        "output_bits": s.output_bits,
        "processing_bytes": s.processing_bytes,
    }
    if s.allowed is not None:
        out["allowed"] = sorted(s.allowed, key=lambda x: (isinstance(x, str), str(x)))
    return out


def graph_from_dict(d: Mapping) -> AlgorithmGraph:
    if "algorithms" not in d:
        raise ConfigError("algorithm document needs an 'algorithms' list")
    specs = [spec_from_dict(x) for x in d["algorithms"]]
    return AlgorithmGraph.build(specs, [tuple(e) for e in d.get("edges", [])])


def graph_to_dict(g: AlgorithmGraph) -> dict:
    edges = []
    for u, v in sorted(g.edges):
        extra = g.extra(u, v)
        edges.append([u, v, extra] if extra else [u, v])
    return {"algorithms": [spec_to_dict(s) for s in g.specs if not s.is_virtual], "edges": edges}


def load_graph(path: PathLike) -> AlgorithmGraph:
    return graph_from_dict(read_json(path))


def _link_from_dict(d: Mapping, src: int, dst: int) -> LinkModel:
    return LinkModel(
        src=src,
        dst=dst,
        base_latency=float(d.get("base_latency_s", 0.0)),
        mu=float(d.get("fn_mu", 0.0)),
        sigma=float(d.get("fn_sigma", 0.0)),
        per_bit_cost=float(d.get("per_bit_cost", 0.0)),
    )


def architecture_from_dict(d: Mapping) -> Architecture:
    try:
        nodes = [
            Node(int(n["id"]), NodeClass(n["class"]), str(n.get("name", "")), float(n.get("tm_bytes", 0.0)))
            for n in d["nodes"]
        ]
        links = [_link_from_dict(l, int(l["src"]), int(l["dst"])) for l in d.get("links", [])]
        if "undirected_links" in d:
            proto = d.get("link", {})
            for u, v in d["undirected_links"]:
                links.append(_link_from_dict(proto, int(u), int(v)))
                links.append(_link_from_dict(proto, int(v), int(u)))
        return Architecture(nodes=tuple(nodes), links=tuple(links))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad architecture document: {exc}") from None


def architecture_to_dict(a: Architecture) -> dict:
    return {
        "nodes": [{"id": n.id, "class": n.cls.value, "name": n.name, "tm_bytes": n.tm_bytes} for n in a.nodes],
        "links": [
            {"src": l.src, "dst": l.dst, "base_latency_s": l.base_latency, "fn_mu": l.mu, "fn_sigma": l.sigma,
             "per_bit_cost": l.per_bit_cost}
            for l in sorted(a.links, key=lambda l: (l.src, l.dst))
        ],
    }


def load_architecture(path: PathLike) -> Architecture:
    return architecture_from_dict(read_json(path))


def link_table_from_dict(d: Mapping) -> dict:
    table = {}
    try:
        for row in d["links"]:
            table[(NodeClass(row["src"]), NodeClass(row["dst"]))] = LinkParams(
                base_latency=float(row.get("base_latency_s", 0.0)),
                mu=float(row.get("fn_mu", 0.0)),
                sigma=float(row.get("fn_sigma", 0.0)),
                per_bit_cost=float(row.get("per_bit_cost", 0.0)),
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad link table: {exc}") from None
    return table


def link_table_to_dict(table: Mapping) -> dict:
    return {
        "links": [
            {"src": s.value, "dst": t.value, "base_latency_s": p.base_latency, "fn_mu": p.mu, "fn_sigma": p.sigma,
             "per_bit_cost": p.per_bit_cost}
            for (s, t), p in table.items()
        ]
    }
