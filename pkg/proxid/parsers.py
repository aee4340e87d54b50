"""
Graph text format.

One declaration per line, ``#`` starts a comment::

    vertex U u
    vertex X observed card=4
    C -> A
    A <-> Y
    fixed W
"""
from __future__ import annotations

import logging
import re
from pathlib import Path

import networkx as nx

from .exceptions import GraphParseError
from .generics import Admg, Cadmg
from .models import VertexKind

__all__ = [
    "dump_graph",
    "load_graph",
    "parse_graph",
]

logger = logging.getLogger(__name__)

_NAME = r"[A-Za-z_][A-Za-z0-9_']*"
_VERTEX = re.compile(rf"^vertex\s+({_NAME})(?:\s+(observed|u|l))?(?:\s+card=(\d+))?$")
_FIXED = re.compile(rf"^fixed\s+({_NAME})$")
_EDGE = re.compile(rf"^({_NAME})\s*(->|<->)\s*({_NAME})$")


def parse_graph(text, source=None):
    kinds, cards = {}, {}
    directed, bidirected = [], []
    seen_edges = set()
    skeleton = nx.DiGraph()

    def fail(lineno, message):
        raise GraphParseError(message, line=lineno, source=source)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue

        match = _VERTEX.match(line)
        if match:
            name, kind, card = match.groups()
            if name in kinds:
                fail(lineno, f"vertex {name!r} declared twice")
            kinds[name] = VertexKind(kind or "observed")
            skeleton.add_node(name)
            if card is not None:
                if int(card) < 2:
                    fail(lineno, f"cardinality of {name!r} must be at least 2")
                cards[name] = int(card)
            continue

        match = _FIXED.match(line)
        if match:
            name = match.group(1)
            if kinds.get(name) is VertexKind.FIXED:
                fail(lineno, f"vertex {name!r} declared fixed twice")
            if kinds.get(name, VertexKind.OBSERVED).is_hidden:
                fail(lineno, f"hidden vertex {name!r} cannot be fixed")
            kinds[name] = VertexKind.FIXED
            skeleton.add_node(name)
            continue

        match = _EDGE.match(line)
        if match:
            a, arrow, b = match.groups()
            for end in (a, b):
                if end not in kinds:
                    fail(lineno, f"undeclared vertex {end!r}")
            if a == b:
                fail(lineno, f"self-loop at {a!r}")
            key = (a, b) if arrow == "->" else ("<->",) + tuple(sorted((a, b)))
            if key in seen_edges:
                fail(lineno, f"duplicate edge {a} {arrow} {b}")
            seen_edges.add(key)
            if arrow == "->":
                if nx.has_path(skeleton, b, a):
                    fail(lineno, f"edge {a} -> {b} closes a directed cycle")
                skeleton.add_edge(a, b)
                directed.append((a, b))
            else:
                bidirected.append((a, b))
            continue

        fail(lineno, f"cannot parse {line!r}")

    for a, b in directed:
        if kinds[b] is VertexKind.FIXED:
            raise GraphParseError(f"fixed vertex {b!r} has an incoming edge", source=source)
    cls = Cadmg if any(k is VertexKind.FIXED for k in kinds.values()) else Admg
    graph = cls(kinds, directed, bidirected, cardinalities=cards)
    logger.debug("parsed %r from %s", graph, source or "<text>")
    return graph


def load_graph(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise GraphParseError(f"cannot read graph file: {exc}", source=str(path))
    return parse_graph(text, source=str(path))


def dump_graph(graph):
    lines = []
    for vertex, kind in graph.kinds.items():
        if kind is VertexKind.FIXED:
            lines.append(f"fixed {vertex}")
            continue
        line = f"vertex {vertex} {kind.value}"
        if graph.cardinality(vertex):
            line += f" card={graph.cardinality(vertex)}"
        lines.append(line)
    lines.extend(f"{a} -> {b}" for a, b in sorted(graph.directed))
    lines.extend(f"{a} <-> {b}" for a, b in sorted(graph.bidirected))
    return "\n".join(lines) + "\n"
