"""
Linear structural equation models over the proximal front-door graph.

Every variable is linear in its parents without interactions. ``A`` is
always binary; in ``binary`` mode ``Z`` and ``M`` are binary too, and in
``discrete`` mode every variable is. Binary variables use the clipped
linear-probability link ``clip(0.5 + scale * Σ coef * parent, 0.01, 0.99)``.
"""
from __future__ import annotations

import enum
import itertools
import logging
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np
import pandas as pd

from .. import settings
from ..exceptions import ConfigError
from ..models import VertexKind
from ..oracle.scm import DiscreteScm

__all__ = [
    "EDGES",
    "ORDER",
    "LinearSem",
    "Mode",
    "edge_name",
    "parse_edge",
    "sample_dataset",
    "sample_dgp",
    "true_ate",
]

logger = logging.getLogger(__name__)

ORDER = ("C", "U", "Z", "A", "M", "W", "Y")
EDGES = (
    ("C", "U"),
    ("U", "A"),
    ("U", "Y"),
    ("U", "Z"),
    ("U", "W"),
    ("C", "A"),
    ("C", "M"),
    ("C", "Y"),
    ("C", "W"),
    ("C", "Z"),
    ("Z", "A"),
    ("Z", "M"),
    ("A", "M"),
    ("A", "Y"),
    ("M", "Y"),
    ("M", "W"),
    ("W", "Y"),
)
COEFFICIENT_RANGE = (-2.0, 2.0)
CLIP = (0.01, 0.99)
MONTE_CARLO_SAMPLES = 10**6


class Mode(enum.Enum):
    GAUSSIAN = "gaussian"
    BINARY = "binary"
    DISCRETE = "discrete"

    @property
    def binary_vertices(self):
        if self is Mode.GAUSSIAN:
            return frozenset({"A"})
        if self is Mode.BINARY:
            return frozenset({"A", "Z", "M"})
        return frozenset(ORDER)


def edge_name(edge):
    return f"{edge[0]}_{edge[1]}"


def parse_edge(name):
    """
    ``"A_Y"`` or ``"A->Y"`` to ``("A", "Y")``; the edge must be in ``EDGES``.
    """
    parts = name.replace("->", "_").split("_")
    edge = tuple(p.strip() for p in parts)
    if len(edge) == 2 and edge[::-1] in EDGES:
        raise ConfigError(f"unknown edge {name!r}; the graph has {edge_name(edge[::-1])} instead")
    if len(edge) != 2 or edge not in EDGES:
        raise ConfigError(f"unknown edge {name!r}; edges are {[edge_name(e) for e in EDGES]}")
    return edge


@dataclass(frozen=True)
class LinearSem:
    coefficients: MappingProxyType
    mode: Mode = Mode.GAUSSIAN
    noise: float = 1.0
    link_scale: float = settings.BINARY_LINK_SCALE
    seed: object = field(default=None, compare=False)

    def __post_init__(self):
        coefficients = dict(self.coefficients)
        if set(coefficients) != set(EDGES):
            missing = sorted(edge_name(e) for e in set(EDGES) - set(coefficients))
            extra = sorted(str(e) for e in set(coefficients) - set(EDGES))
            raise ConfigError(
                f"coefficients must cover the edge list (missing {missing}, extra {extra})"
            )
        if not all(np.isfinite(v) for v in coefficients.values()):
            raise ConfigError("coefficients must be finite")
        object.__setattr__(self, "coefficients", MappingProxyType(coefficients))
        object.__setattr__(self, "mode", Mode(self.mode))

    def parents(self, vertex):
        return tuple(p for p, c in EDGES if c == vertex)

    def with_overrides(self, overrides):
        coefficients = dict(self.coefficients)
        for edge, value in overrides.items():
            edge = parse_edge(edge) if isinstance(edge, str) else tuple(edge)
            if edge not in coefficients:
                raise ConfigError(f"cannot override unknown edge {edge}")
            coefficients[edge] = float(value)
        return LinearSem(coefficients, self.mode, self.noise, self.link_scale, self.seed)

    def probability(self, linear):
        return np.clip(0.5 + self.link_scale * linear, *CLIP)

    def sample(self, n, rng, interventions=None):
        """
        Draw ``n`` rows in topological order; ``interventions`` pins
        vertices to constants.
        """
        interventions = dict(interventions or {})
        binary = self.mode.binary_vertices
        columns = {}
        for v in ORDER:
            noise = rng.standard_normal(n) if v not in binary else rng.random(n)
            if v in interventions:
                columns[v] = np.full(n, float(interventions[v]))
                continue
            linear = np.zeros(n)
            for p in self.parents(v):
                linear += self.coefficients[(p, v)] * columns[p]
            if v in binary:
                columns[v] = (noise < self.probability(linear)).astype(float)
            else:
                columns[v] = linear + self.noise * noise
        return pd.DataFrame({v: columns[v] for v in ORDER})

    def path_sum(self):
        """
        The sum over directed ``A -> Y`` paths of coefficient products.
        """
        total = 0.0
        for path in _paths("A", "Y"):
            total += float(np.prod([self.coefficients[e] for e in zip(path, path[1:])]))
        return total

    def to_discrete_scm(self):
        """
        The discrete-mode SEM as an SCM with ``U`` resolvable hidden.
        """
        if self.mode is not Mode.DISCRETE:
            raise ConfigError("only discrete-mode SEMs have an exact discrete SCM")
        kinds = {v: VertexKind.RESOLVABLE if v == "U" else VertexKind.OBSERVED for v in ORDER}
        parents = {v: tuple(sorted(self.parents(v))) for v in ORDER}
        cpts = {}
        for v in ORDER:
            ps = parents[v]
            table = np.zeros((2,) * len(ps) + (2,))
            for values in itertools.product((0, 1), repeat=len(ps)):
                linear = sum(self.coefficients[(p, v)] * x for p, x in zip(ps, values))
                one = float(self.probability(linear))
                table[values] = (1.0 - one, one)
            cpts[v] = table
        return DiscreteScm(kinds, parents, {v: 2 for v in ORDER}, cpts)


def _paths(source, target):
    children = {}
    for p, c in EDGES:
        children.setdefault(p, []).append(c)
    stack = [(source,)]
    while stack:
        path = stack.pop()
        if path[-1] == target:
            yield path
            continue
        for c in children.get(path[-1], ()):
            stack.append(path + (c,))


def sample_dgp(seed, mode=Mode.GAUSSIAN, overrides=None):
    """
    Draw every edge coefficient i.i.d. from Unif(-2, 2), in edge-list order.
    """
    rng = np.random.default_rng(seed)
    low, high = COEFFICIENT_RANGE
    coefficients = {edge: float(rng.uniform(low, high)) for edge in EDGES}
    sem = LinearSem(coefficients, Mode(mode), seed=seed)
    return sem.with_overrides(overrides) if overrides else sem


def true_ate(sem, seed=0, samples=MONTE_CARLO_SAMPLES):
    """
    E[Y(1)] - E[Y(0)]: the path sum in Gaussian mode, exact enumeration in
    discrete mode, and a common-random-numbers Monte-Carlo contrast in
    binary mode.
    """
    if sem.mode is Mode.GAUSSIAN:
        return sem.path_sum()
    if sem.mode is Mode.DISCRETE:
        scm = sem.to_discrete_scm()
        means = [
            float(scm.interventional({"A": a}, keep=("Y",)).values[1]) for a in (0, 1)
        ]
        return means[1] - means[0]
    treated = sem.sample(samples, np.random.default_rng(seed), {"A": 1})
    control = sem.sample(samples, np.random.default_rng(seed), {"A": 0})
    return float(treated["Y"].mean() - control["Y"].mean())


def sample_dataset(sem, n, seed):
    """
    One dataset of ``n`` rows; ``U`` is included for the oracle estimator.
    """
    data = sem.sample(n, np.random.default_rng(seed))
    if sem.mode is not Mode.GAUSSIAN:
        binary = list(sem.mode.binary_vertices)
        data[binary] = data[binary].astype(int)
    return data
