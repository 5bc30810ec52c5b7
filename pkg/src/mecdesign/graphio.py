"""Graph serialization: the JSON contract and the plain-text edge list.

JSON format::

    {"vertices": ["X1", ...],
     "directed": [["X1", "X2"], ...],
     "undirected": [["X2", "X3"], ...]}

Edge-list format: one edge per line, ``a -> b`` or ``a -- b``; ``#`` starts
a comment. Vertices are taken in order of first appearance.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from .errors import GraphFormatError
from .graphs import Dag, PartiallyDirectedGraph


def graph_to_dict(g: PartiallyDirectedGraph) -> dict[str, Any]:
    names = g.vertex_names
    return {
        "vertices": list(names),
        "directed": sorted([names[a], names[b]] for a, b in g.directed),
        "undirected": sorted([names[a], names[b]] for a, b in g.undirected),
    }


def graph_from_dict(d: dict[str, Any]) -> PartiallyDirectedGraph:
    try:
        names = list(d["vertices"])
    except (KeyError, TypeError) as exc:
        raise GraphFormatError("graph JSON must contain a 'vertices' list") from exc
    if len(set(names)) != len(names):
        raise GraphFormatError("vertex names must be distinct")
    index = {n: i for i, n in enumerate(names)}

    def resolve(pair) -> tuple[int, int]:
        if len(pair) != 2:
            raise GraphFormatError(f"edge {pair!r} must name two vertices")
        a, b = pair
        if a not in index or b not in index:
            raise GraphFormatError(f"edge {pair!r} references unknown vertex")
        return index[a], index[b]

    directed = [resolve(e) for e in d.get("directed", [])]
    undirected = [resolve(e) for e in d.get("undirected", [])]
    if len(set(directed)) != len(directed):
        raise GraphFormatError("duplicate directed edge")
    und_keys = [tuple(sorted(e)) for e in undirected]
    if len(set(und_keys)) != len(und_keys):
        raise GraphFormatError("duplicate undirected edge")
    return PartiallyDirectedGraph.build(names, directed, undirected)


def graph_to_json(g: PartiallyDirectedGraph) -> str:
    return json.dumps(graph_to_dict(g), separators=(",", ":"), sort_keys=True)


def parse_edge_list(text: str) -> PartiallyDirectedGraph:
    names: list[str] = []
    index: dict[str, int] = {}

    def vid(name: str) -> int:
        if name not in index:
            index[name] = len(names)
            names.append(name)
        return index[name]

    directed: list[tuple[int, int]] = []
    undirected: list[tuple[int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "->" in line:
            parts = [s.strip() for s in line.split("->")]
            bucket = directed
        elif "--" in line:
            parts = [s.strip() for s in line.split("--")]
            bucket = undirected
        else:
            raise GraphFormatError(f"line {lineno}: expected 'a -> b' or 'a -- b'")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise GraphFormatError(f"line {lineno}: malformed edge {line!r}")
        bucket.append((vid(parts[0]), vid(parts[1])))
    seen: set[tuple[int, int]] = set()
    for a, b in directed + undirected:
        key = (min(a, b), max(a, b))
        if key in seen:
            raise GraphFormatError(f"duplicate or conflicting edge on pair {key}")
        seen.add(key)
    return PartiallyDirectedGraph.build(names, directed, undirected)


def load_graph(path: str | Path) -> PartiallyDirectedGraph:
    """Load a graph file, sniffing JSON versus edge-list by the first byte."""
    text = Path(path).read_text(encoding="utf-8")
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise GraphFormatError(f"invalid JSON in {path}: {exc}") from exc
        return graph_from_dict(payload)
    return parse_edge_list(text)


def save_graph(g: PartiallyDirectedGraph, path: str | Path) -> None:
    Path(path).write_text(graph_to_json(g) + "\n", encoding="utf-8")


def load_dag(path: str | Path) -> Dag:
    g = load_graph(path)
    if g.undirected:
        raise GraphFormatError(f"{path}: expected a fully directed DAG")
    return Dag(g.vertex_names, g.directed, frozenset())
