from __future__ import annotations

from types import MappingProxyType

import networkx as nx

from . import mixins as graph_mixins
from .exceptions import GraphError
from .models import VertexKind

__all__ = [
    "Admg",
    "BaseGraph",
    "Cadmg",
]


class BaseGraph(object):
    """
    Immutable mixed graph: vertex kinds, directed and bidirected edges.

    Bidirected edges are stored as sorted pairs. Cardinalities are optional
    metadata (categories per vertex) and do not take part in equality.
    """

    def __init__(self, vertices, directed=(), bidirected=(), cardinalities=None):
        kinds = {}
        for name, kind in dict(vertices).items():
            if not isinstance(name, str) or not name:
                raise GraphError(f"vertex names must be non-empty strings, got {name!r}")
            kinds[name] = VertexKind(kind)
        self._kinds = MappingProxyType(dict(sorted(kinds.items())))
        self._directed = frozenset((a, b) for a, b in directed)
        self._bidirected = frozenset(tuple(sorted(e)) for e in bidirected)
        cards = {v: int(k) for v, k in (cardinalities or {}).items() if v in kinds}
        self._cardinalities = MappingProxyType(dict(sorted(cards.items())))
        self._canonical = None
        self._validate()

        self._parents = {v: set() for v in kinds}
        self._children = {v: set() for v in kinds}
        self._siblings = {v: set() for v in kinds}
        for a, b in self._directed:
            self._parents[b].add(a)
            self._children[a].add(b)
        for a, b in self._bidirected:
            self._siblings[a].add(b)
            self._siblings[b].add(a)

    def _validate(self):
        errors = []
        for a, b in sorted(self._directed) + sorted(self._bidirected):
            for end in (a, b):
                if end not in self._kinds:
                    errors.append(f"edge endpoint {end!r} is not a declared vertex")
            if a == b:
                errors.append(f"self-loop at {a!r}")
        for a, b in self._directed:
            if self._kinds.get(b) is VertexKind.FIXED:
                errors.append(f"fixed vertex {b!r} has incoming edge from {a!r}")
        for a, b in self._bidirected:
            for end in (a, b):
                if self._kinds.get(end) is VertexKind.FIXED:
                    errors.append(f"fixed vertex {end!r} has a bidirected edge")
        if errors:
            raise GraphError("; ".join(errors))
        if not nx.is_directed_acyclic_graph(self.digraph):
            cycle = nx.find_cycle(self.digraph)
            raise GraphError(f"directed cycle through {[a for a, _ in cycle]}")

    # construction

    def _rebuild(self, cls=None, kinds=None, directed=None, bidirected=None):
        cls = cls or type(self)
        return cls(
            self._kinds if kinds is None else kinds,
            self._directed if directed is None else directed,
            self._bidirected if bidirected is None else bidirected,
            cardinalities=self._cardinalities,
        )

    def _cadmg_class(self):
        return Cadmg

    def _known(self, vertices):
        if isinstance(vertices, str):
            vertices = (vertices,)
        vertices = frozenset(vertices)
        unknown = vertices - self._kinds.keys()
        if unknown:
            raise GraphError(f"unknown vertices {sorted(unknown)}")
        return vertices

    # accessors

    @property
    def digraph(self):
        graph = getattr(self, "_digraph", None)
        if graph is None:
            graph = nx.DiGraph()
            graph.add_nodes_from(self._kinds)
            graph.add_edges_from(self._directed)
            self._digraph = graph
        return graph

    @property
    def kinds(self):
        return self._kinds

    @property
    def vertices(self):
        return tuple(self._kinds)

    @property
    def directed(self):
        return self._directed

    @property
    def bidirected(self):
        return self._bidirected

    @property
    def cardinalities(self):
        return self._cardinalities

    def cardinality(self, vertex, default=None):
        return self._cardinalities.get(vertex, default)

    def with_cardinalities(self, cardinalities):
        merged = dict(self._cardinalities)
        merged.update(cardinalities)
        return type(self)(self._kinds, self._directed, self._bidirected, cardinalities=merged)

    def kind(self, vertex):
        try:
            return self._kinds[vertex]
        except KeyError:
            raise GraphError(f"unknown vertex {vertex!r}")

    def _of_kind(self, *kinds):
        return frozenset(v for v, k in self._kinds.items() if k in kinds)

    @property
    def observed(self):
        return self._of_kind(VertexKind.OBSERVED)

    @property
    def hidden(self):
        return self._of_kind(VertexKind.RESOLVABLE, VertexKind.UNRESOLVABLE)

    @property
    def resolvable(self):
        return self._of_kind(VertexKind.RESOLVABLE)

    @property
    def unresolvable(self):
        return self._of_kind(VertexKind.UNRESOLVABLE)

    @property
    def fixed(self):
        return self._of_kind(VertexKind.FIXED)

    @property
    def random(self):
        return frozenset(self._kinds) - self.fixed

    def __contains__(self, vertex):
        return vertex in self._kinds

    def __eq__(self, other):
        if not isinstance(other, BaseGraph):
            return NotImplemented
        return (self._kinds, self._directed, self._bidirected) == (
            other._kinds,
            other._directed,
            other._bidirected,
        )

    def __hash__(self):
        return hash((tuple(self._kinds.items()), self._directed, self._bidirected))

    def __repr__(self):
        edges = sorted(f"{a}->{b}" for a, b in self._directed)
        edges += sorted(f"{a}<->{b}" for a, b in self._bidirected)
        return f"{type(self).__name__}({', '.join(self.vertices)}; {', '.join(edges)})"


# ################################################# #
# Concrete graph classes that provide the operations #
# by composing the mixin classes with the base graph. #
# ################################################# #


class Admg(
    graph_mixins.ReachabilityMixin,
    graph_mixins.DistrictMixin,
    graph_mixins.SeparationMixin,
    graph_mixins.ProjectionMixin,
    graph_mixins.InterventionMixin,
    BaseGraph,
):
    """
    Acyclic directed mixed graph over observed and hidden vertices.
    """

    def _validate(self):
        super(Admg, self)._validate()
        if type(self) is Admg and self.fixed:
            raise GraphError(f"an Admg has no fixed vertices, got {sorted(self.fixed)}")

    def as_cadmg(self):
        return self._rebuild(cls=Cadmg)

    def observed_projection(self):
        """
        The latent projection onto the observed vertices.
        """
        return self.latent_project(self.hidden)


class Cadmg(graph_mixins.FixingMixin, Admg):
    """
    Conditional ADMG: an ADMG whose fixed vertices only emit directed edges.
    """

    def as_cadmg(self):
        return self
