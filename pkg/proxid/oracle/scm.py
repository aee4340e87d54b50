"""
Finite discrete structural causal models.

Every vertex ``v`` carries a conditional probability table of shape
``(*cards of sorted parents, card of v)``; the last axis sums to one.
Bidirected edges of the source graph become explicit hidden parents named
``"a<->b"``.
"""
from __future__ import annotations

import logging
from types import MappingProxyType

import networkx as nx
import numpy as np
import pandas as pd

from .. import settings
from ..exceptions import GraphError
from ..models import VertexKind
from .factors import DiscreteDistribution, Factor

__all__ = [
    "DiscreteScm",
    "confounder_name",
    "random_scm",
]

logger = logging.getLogger(__name__)

CPT_TOLERANCE = 1e-12


def confounder_name(a, b):
    return f"{a}<->{b}"


class DiscreteScm(object):
    def __init__(self, kinds, parents, cards, cpts):
        self._kinds = MappingProxyType({v: VertexKind(k) for v, k in sorted(dict(kinds).items())})
        self._parents = MappingProxyType(
            {v: tuple(sorted(parents.get(v, ()))) for v in self._kinds}
        )
        self._cards = MappingProxyType({v: int(cards[v]) for v in self._kinds})
        self._cpts = MappingProxyType({v: np.asarray(cpts[v], dtype=float) for v in self._kinds})
        self._validate()
        dag = nx.DiGraph()
        dag.add_nodes_from(self._kinds)
        dag.add_edges_from((p, v) for v, ps in self._parents.items() for p in ps)
        self._order = tuple(nx.lexicographical_topological_sort(dag))

    def _validate(self):
        for v, kind in self._kinds.items():
            if kind is VertexKind.FIXED:
                raise GraphError(f"an SCM has no fixed vertices, got {v!r}")
            if self._cards[v] < 1:
                raise GraphError(f"cardinality of {v!r} must be positive")
            for p in self._parents[v]:
                if p not in self._kinds:
                    raise GraphError(f"parent {p!r} of {v!r} is not a vertex")
            shape = tuple(self._cards[p] for p in self._parents[v]) + (self._cards[v],)
            cpt = self._cpts[v]
            if cpt.shape != shape:
                raise GraphError(f"CPT of {v!r} has shape {cpt.shape}, expected {shape}")
            drift = np.max(np.abs(cpt.sum(axis=-1) - 1.0), initial=0.0)
            if np.any(cpt < 0) or drift > CPT_TOLERANCE:
                raise GraphError(f"CPT rows of {v!r} are not distributions")

    @classmethod
    def from_graph(cls, graph, cards, cpts):
        """
        Build an SCM over ``graph`` with every bidirected edge made explicit.
        """
        kinds, parents = _explicit_confounders(graph)
        return cls(kinds, parents, cards, cpts)

    # accessors

    @property
    def vertices(self):
        return tuple(self._kinds)

    @property
    def kinds(self):
        return self._kinds

    @property
    def parents(self):
        return self._parents

    @property
    def cards(self):
        return dict(self._cards)

    @property
    def cpts(self):
        return self._cpts

    @property
    def order(self):
        return self._order

    @property
    def observed_vertices(self):
        return tuple(v for v, k in self._kinds.items() if k is VertexKind.OBSERVED)

    def factor(self, vertex):
        return Factor(self._parents[vertex] + (vertex,), self._cpts[vertex])

    # distributions

    def kernel(self, do=(), keep=None, cpts=None):
        """
        The truncated factorization with the CPTs of ``do`` removed, as a
        table over ``keep`` (default: every vertex) and the ``do`` axes.
        """
        do = tuple(sorted(set(do)))
        for v in do:
            if v not in self._kinds:
                raise GraphError(f"unknown intervention target {v!r}")
        cpts = dict(self._cpts) if cpts is None else cpts
        factors = [Factor(self._parents[v] + (v,), cpts[v]) for v in self._order if v not in do]
        keep = self.vertices if keep is None else keep
        keep = tuple(v for v in keep if v not in do)
        table = _eliminate(factors, set(keep) | set(do))
        return table.expand(tuple(keep) + do, self._cards)

    def interventional(self, assignments=None, keep=None):
        """
        p(keep | do(assignments)) as a distribution; hidden variables are
        retained unless ``keep`` leaves them out.
        """
        assignments = dict(assignments or {})
        table = self.kernel(assignments, keep=keep)
        for v, value in assignments.items():
            table = table.select(v, int(value))
        return DiscreteDistribution.from_factor(table, do=assignments)

    def observed(self):
        return self.interventional(keep=self.observed_vertices)

    def policy_interventional(self, policies, keep=None):
        """
        The distribution when each treatment ``a`` is set by ``f(inputs)``.

        ``policies`` maps a treatment to ``(inputs, function)``; ``function``
        receives the input values in the order of ``inputs``.
        """
        kinds = dict(self._kinds)
        parents = {v: ps for v, ps in self._parents.items()}
        cpts = dict(self._cpts)
        for a, (inputs, function) in policies.items():
            inputs = tuple(sorted(inputs))
            shape = tuple(self._cards[w] for w in inputs) + (self._cards[a],)
            table = np.zeros(shape)
            for index in np.ndindex(*shape[:-1]):
                value = int(function(*index))
                if not 0 <= value < self._cards[a]:
                    raise GraphError(f"policy for {a!r} returned {value}")
                table[index + (value,)] = 1.0
            parents[a] = inputs
            cpts[a] = table
        modified = DiscreteScm(kinds, parents, self._cards, cpts)
        return modified.interventional(keep=keep)

    def sample(self, n, rng):
        """
        Draw ``n`` rows by ancestral sampling; returns a DataFrame of
        category indices over every vertex.
        """
        values = {}
        for v in self._order:
            probs = self._cpts[v][tuple(values[p] for p in self._parents[v])]
            probs = np.broadcast_to(probs, (n, self._cards[v]))
            draws = rng.random(n)[:, None]
            index = (draws > np.cumsum(probs, axis=1)).sum(axis=1)
            values[v] = np.minimum(index, self._cards[v] - 1)
        return pd.DataFrame({v: values[v] for v in self.vertices})

    def sever(self, parent, child):
        """
        A copy in which the CPT of ``child`` ignores ``parent``: every slice
        along the parent axis equals the slice at category 0.
        """
        if parent not in self._parents.get(child, ()):
            raise GraphError(f"{parent!r} is not a parent of {child!r}")
        axis = self._parents[child].index(parent)
        cpt = np.take(self._cpts[child], [0], axis=axis)
        cpts = dict(self._cpts)
        cpts[child] = np.broadcast_to(cpt, self._cpts[child].shape).copy()
        return DiscreteScm(self._kinds, self._parents, self._cards, cpts)


def _explicit_confounders(graph):
    kinds = dict(graph.kinds)
    parents = {v: set(graph.parents(v)) for v in graph.vertices}
    for a, b in graph.bidirected:
        latent = confounder_name(a, b)
        kinds[latent] = VertexKind.UNRESOLVABLE
        parents[latent] = set()
        parents[a].add(latent)
        parents[b].add(latent)
    return kinds, parents


def _eliminate(factors, keep):
    """
    Multiply ``factors`` and sum out everything outside ``keep``, eliminating
    each variable as soon as no remaining factor needs it.
    """
    factors = list(factors)
    variables = {v for f in factors for v in f.variables} - set(keep)
    for v in sorted(variables, key=lambda v: sum(v in f.variables for f in factors)):
        touching = [f for f in factors if v in f.variables]
        if not touching:
            continue
        factors = [f for f in factors if v not in f.variables]
        merged = touching[0].product(*touching[1:]) if len(touching) > 1 else touching[0]
        factors.append(merged.sum_out([v]))
    if not factors:
        return Factor.scalar(1.0)
    return factors[0].product(*factors[1:]) if len(factors) > 1 else factors[0]


def random_scm(graph, cards=None, seed=0, floor=0.0, concentration=1.0):
    """
    Draw every CPT row from a symmetric Dirichlet and map it to
    ``floor + (1 - k * floor) * p`` so each entry is at least ``floor``.

    Cardinalities default to the graph's ``card=`` metadata, then to
    ``settings.DEFAULT_CARDINALITY``.
    """
    if graph.fixed:
        raise GraphError("random SCMs are drawn over graphs without fixed vertices")
    rng = np.random.default_rng(seed)
    kinds, parents = _explicit_confounders(graph)
    merged = {v: graph.cardinality(v, settings.DEFAULT_CARDINALITY) for v in graph.vertices}
    merged.update({v: settings.DEFAULT_CARDINALITY for v in kinds if v not in merged})
    merged.update(cards or {})

    cpts = {}
    for v in sorted(kinds):
        k = merged[v]
        if not 0.0 <= floor <= 1.0 / k + 1e-15:
            raise GraphError(f"floor {floor} outside [0, 1/{k}] for {v!r}")
        shape = tuple(merged[p] for p in sorted(parents[v]))
        rows = rng.dirichlet(np.full(k, float(concentration)), size=int(np.prod(shape, dtype=int)))
        rows = floor + (1.0 - k * floor) * rows
        rows /= rows.sum(axis=1, keepdims=True)
        cpts[v] = rows.reshape(shape + (k,))
    logger.debug("drew SCM over %d vertices (seed=%r)", len(kinds), seed)
    return DiscreteScm(kinds, parents, merged, cpts)
