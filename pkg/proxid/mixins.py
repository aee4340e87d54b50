"""
Graph operations, one concern per mixin.

The concrete graph classes in ``generics`` compose these mixins over the
immutable storage provided by ``BaseGraph``. Every operation is pure and
returns new values.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import networkx as nx

from .exceptions import GraphError, NotFixableError
from .models import VertexKind

__all__ = [
    "DistrictMixin",
    "FixingMixin",
    "FixingResult",
    "InterventionMixin",
    "ProjectionMixin",
    "ReachabilityMixin",
    "SeparationMixin",
    "intervened_name",
]


def intervened_name(vertex):
    return f"do({vertex})"


class ReachabilityMixin:
    """
    Parents, children, siblings and the reflexive ancestor/descendant closures.
    """

    def parents(self, vertices):
        return frozenset(p for v in self._known(vertices) for p in self._parents[v])

    def children(self, vertices):
        return frozenset(c for v in self._known(vertices) for c in self._children[v])

    def siblings(self, vertices):
        return frozenset(s for v in self._known(vertices) for s in self._siblings[v])

    def ancestors(self, vertices):
        found = set(self._known(vertices))
        for v in tuple(found):
            found |= nx.ancestors(self.digraph, v)
        return frozenset(found)

    def descendants(self, vertices):
        found = set(self._known(vertices))
        for v in tuple(found):
            found |= nx.descendants(self.digraph, v)
        return frozenset(found)

    def ancestors_avoiding(self, vertices, avoid):
        """
        Vertices with a directed path into ``vertices`` that never passes
        through ``avoid`` (``vertices`` themselves included).
        """
        targets = self._known(vertices)
        avoid = self._known(avoid) - targets
        pruned = self.digraph.subgraph(set(self.vertices) - avoid)
        found = set(targets)
        for v in targets:
            found |= nx.ancestors(pruned, v)
        return frozenset(found)


class DistrictMixin:
    def districts(self, scope=None):
        """
        Partition ``scope`` (default: all random vertices) into the
        connected components of the bidirected part restricted to it,
        sorted by least vertex.
        """
        scope = self.random if scope is None else self._known(scope)
        fixed = scope & self.fixed
        if fixed:
            raise GraphError(
                f"districts are defined over random vertices, got fixed {sorted(fixed)}"
            )
        skeleton = nx.Graph()
        skeleton.add_nodes_from(scope)
        skeleton.add_edges_from((a, b) for a, b in self.bidirected if a in scope and b in scope)
        components = (frozenset(c) for c in nx.connected_components(skeleton))
        return tuple(sorted(components, key=min))

    def district(self, vertex, scope=None):
        for component in self.districts(scope):
            if vertex in component:
                return component
        raise GraphError(f"vertex {vertex!r} is not in the district scope")


class SeparationMixin:
    def canonical_dag(self):
        """
        The DAG obtained by replacing each bidirected edge ``a <-> b`` with a
        fresh hidden parent of ``a`` and ``b``.
        """
        if self._canonical is None:
            dag = nx.DiGraph()
            dag.add_nodes_from(self.vertices)
            dag.add_edges_from(self.directed)
            for a, b in self.bidirected:
                latent = ("<->", a, b)
                dag.add_edges_from(((latent, a), (latent, b)))
            self._canonical = dag
        return self._canonical

    def m_separated(self, x, y, z=()):
        """
        Whether ``x`` and ``y`` are m-separated given ``z``; fixed vertices
        are always conditioned on.
        """
        x, y, z = self._known(x), self._known(y), self._known(z)
        if x & y or x & z or y & z:
            raise GraphError("m-separation needs disjoint sets")
        if not x or not y:
            return True
        given = (z | self.fixed) - x - y
        return nx.is_d_separator(self.canonical_dag(), set(x), set(y), set(given))


class ProjectionMixin:
    def with_kinds(self, kinds):
        updated = dict(self.kinds)
        for vertex, kind in kinds.items():
            self._known(vertex)
            updated[vertex] = VertexKind(kind)
        return self._rebuild(kinds=updated)

    def latent_project(self, hide):
        """
        Eliminate the hidden vertices in ``hide`` one at a time.

        Eliminating ``h`` adds ``p -> c`` for every parent/child pair and
        ``a <-> c`` for every two children and every sibling/child pair.
        """
        hide = self._known(hide)
        for vertex in sorted(hide):
            kind = self.kind(vertex)
            if kind is VertexKind.FIXED:
                raise GraphError(f"cannot project out fixed vertex {vertex!r}")
            if not kind.is_hidden:
                raise GraphError(f"cannot project out observed vertex {vertex!r}")
        directed = set(self.directed)
        bidirected = {frozenset(e) for e in self.bidirected}
        for h in sorted(hide):
            parents = {a for a, b in directed if b == h}
            children = {b for a, b in directed if a == h}
            siblings = {next(iter(e - {h})) for e in bidirected if h in e}
            directed = {e for e in directed if h not in e}
            bidirected = {e for e in bidirected if h not in e}
            directed |= {(p, c) for p in parents for c in children}
            bidirected |= {frozenset(pair) for pair in itertools.combinations(children, 2)}
            bidirected |= {frozenset((s, c)) for s in siblings for c in children if s != c}
        kinds = {v: k for v, k in self.kinds.items() if v not in hide}
        return self._rebuild(kinds=kinds, directed=directed, bidirected=bidirected)

    def project_onto(self, keep):
        """
        Marginalize every random vertex outside ``keep``; fixed vertices stay.
        """
        keep = self._known(keep)
        drop = self.random - keep
        relabel = {v: VertexKind.UNRESOLVABLE for v in drop if not self.kind(v).is_hidden}
        graph = self.with_kinds(relabel) if relabel else self
        return graph.latent_project(drop)

    def subgraph(self, keep):
        keep = self._known(keep)
        return self._rebuild(
            kinds={v: k for v, k in self.kinds.items() if v in keep},
            directed={(a, b) for a, b in self.directed if a in keep and b in keep},
            bidirected={frozenset((a, b)) for a, b in self.bidirected if a in keep and b in keep},
        )


class InterventionMixin:
    def intervene(self, vertices):
        """
        Move ``vertices`` to the fixed set and delete every edge with an
        arrowhead at them, without checking fixability.
        """
        vertices = self._known(vertices)
        kinds = dict(self.kinds)
        for v in vertices:
            if kinds[v] is VertexKind.FIXED:
                raise NotFixableError(v, "already fixed")
            if kinds[v].is_hidden:
                raise NotFixableError(v, "hidden vertices cannot be intervened on")
            kinds[v] = VertexKind.FIXED
        return self._rebuild(
            cls=self._cadmg_class(),
            kinds=kinds,
            directed={(a, b) for a, b in self.directed if b not in vertices},
            bidirected={frozenset(e) for e in self.bidirected if not set(e) & vertices},
        )

    def split_intervene(self, vertices):
        """
        Split each vertex in ``vertices`` into a random copy keeping its
        incoming and bidirected edges and a fixed copy ``do(v)`` keeping its
        outgoing edges.
        """
        vertices = self._known(vertices)
        for v in vertices:
            if self.kind(v) is not VertexKind.OBSERVED:
                raise GraphError(f"cannot split {self.kind(v).value} vertex {v!r}")
        if not vertices:
            return self._rebuild(cls=self._cadmg_class())
        kinds = dict(self.kinds)
        kinds.update({intervened_name(v): VertexKind.FIXED for v in vertices})
        directed = {
            (intervened_name(a) if a in vertices else a, b) for a, b in self.directed
        }
        return self._rebuild(cls=self._cadmg_class(), kinds=kinds, directed=directed)


@dataclass(frozen=True)
class FixingResult:
    sequence: tuple
    stuck: frozenset

    @property
    def ok(self):
        return not self.stuck


class FixingMixin:
    def _random_vertex(self, vertex):
        self._known(vertex)
        kind = self.kind(vertex)
        if kind is VertexKind.FIXED:
            raise NotFixableError(vertex, "already fixed")
        if kind.is_hidden:
            raise NotFixableError(vertex, "vertex is hidden")

    def fixable(self, vertex):
        self._random_vertex(vertex)
        return self.descendants(vertex) & self.district(vertex) == {vertex}

    def fix(self, vertex):
        if not self.fixable(vertex):
            shared = sorted((self.descendants(vertex) & self.district(vertex)) - {vertex})
            raise NotFixableError(vertex, f"descendants {shared} share its district")
        return self.intervene(vertex)

    def find_valid_sequence(self, vertices):
        """
        Greedily fix the least-named fixable vertex of the remainder.
        """
        remaining = set(self._known(vertices))
        graph, sequence = self, []
        while remaining:
            for v in sorted(remaining):
                if graph.fixable(v):
                    graph = graph.fix(v)
                    sequence.append(v)
                    remaining.discard(v)
                    break
            else:
                return FixingResult(tuple(sequence), frozenset(remaining))
        return FixingResult(tuple(sequence), frozenset())

    def mb_star(self, vertex):
        """
        Vertices joined to ``vertex`` by a collider path: its parents, its
        district, and the district's parents.
        """
        self._random_vertex(vertex)
        district = self.district(vertex)
        return (self.parents(vertex) | district | self.parents(district)) - {vertex}
