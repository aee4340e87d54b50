from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .exceptions import QueryError

__all__ = [
    "CausalQuery",
    "Identified",
    "NotIdentified",
    "PolicySpec",
    "VertexKind",
]


class VertexKind(enum.Enum):
    OBSERVED = "observed"
    RESOLVABLE = "u"
    UNRESOLVABLE = "l"
    FIXED = "fixed"

    @property
    def is_hidden(self):
        return self in (VertexKind.RESOLVABLE, VertexKind.UNRESOLVABLE)

    @property
    def is_random(self):
        return self is not VertexKind.FIXED


@dataclass(frozen=True)
class PolicySpec:
    """
    A known policy ``A := f(W_A)`` whose inputs are non-descendants of ``A``.
    """

    treatment: str
    inputs: tuple[str, ...]
    function: str = ""

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(sorted(self.inputs)))


@dataclass(frozen=True)
class CausalQuery:
    """
    The counterfactual query p(Y(a)), optionally with proxies and policies.

    ``treatments`` maps each treatment vertex to the label its intervened
    value is rendered with.
    """

    outcomes: tuple[str, ...]
    treatments: dict = field(default_factory=dict)
    proxies: tuple[str, ...] = ()
    policies: tuple[PolicySpec, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "outcomes", tuple(sorted(self.outcomes)))
        object.__setattr__(self, "proxies", tuple(sorted(self.proxies)))
        object.__setattr__(self, "policies", tuple(self.policies))
        if not isinstance(self.treatments, dict):
            object.__setattr__(self, "treatments", dict(self.treatments))

    def __hash__(self):
        return hash((self.outcomes, tuple(sorted(self.treatments.items())), self.proxies))

    @property
    def treatment_set(self):
        return frozenset(self.treatments)

    def label(self, vertex):
        return self.treatments.get(vertex) or vertex.lower()

    def validate(self, graph, allow_proxies=True):
        """
        Check the query against ``graph`` and raise ``QueryError`` listing
        every problem found.
        """
        errors = []
        y, a, m = set(self.outcomes), set(self.treatments), set(self.proxies)
        if not y:
            errors.append("query has no outcomes")
        for name, left, right in (("outcomes", y, a), ("outcomes", y, m), ("treatments", a, m)):
            if left & right:
                errors.append(f"{name} overlap another role: {sorted(left & right)}")
        if m and not allow_proxies:
            errors.append(f"classical identification does not accept proxies: {sorted(m)}")
        for vertex in sorted(y | a | m):
            if vertex not in graph:
                errors.append(f"unknown vertex {vertex!r}")
            elif graph.kind(vertex) is not VertexKind.OBSERVED:
                errors.append(f"vertex {vertex!r} is {graph.kind(vertex).value}, not observed")
        for policy in self.policies:
            if policy.treatment not in a:
                errors.append(f"policy for {policy.treatment!r} which is not a treatment")
                continue
            for w in policy.inputs:
                if w not in graph:
                    errors.append(f"unknown policy input {w!r}")
                elif w in graph.descendants({policy.treatment}):
                    errors.append(
                        f"policy input {w!r} is a descendant of its treatment {policy.treatment!r}"
                    )
        if errors:
            raise QueryError("; ".join(errors))
        return self


@dataclass(frozen=True)
class Identified:
    estimand: object
    trace: tuple = ()

    identified = True

    @property
    def ledger(self):
        return self.estimand.ledger


@dataclass(frozen=True)
class NotIdentified:
    district: frozenset
    stuck: frozenset
    trace: tuple = ()

    identified = False

    def describe(self):
        return (
            f"not identified: district {{{', '.join(sorted(self.district))}}} "
            f"has no admissible sequence; stuck at {{{', '.join(sorted(self.stuck))}}}"
        )
