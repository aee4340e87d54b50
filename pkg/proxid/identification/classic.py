"""
The ID algorithm phrased through fixing.

``p(Y(a))`` factorizes over the districts of the ancestral set ``Y*``; each
district kernel ``p(D | do(V \\ D))`` is derived by fixing ``V \\ D`` in a
valid order, and the query is identified iff every district has one.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np

from ..estimands.nodes import Density, Estimand, KernelRef, Plug, Product, Quotient, Sum
from ..exceptions import NotFixableError, QueryError
from ..models import CausalQuery, Identified, NotIdentified
from ..oracle.factors import Factor
from .fixing import assemble, emit_fix, plug_district

__all__ = [
    "PolicyRecipe",
    "ancestral_set",
    "derive_district",
    "identify",
    "reduce_policy_query",
]

logger = logging.getLogger(__name__)


def ancestral_set(graph, outcomes, treatments=()):
    """
    Vertices with a directed path into ``outcomes`` avoiding ``treatments``.
    """
    outcomes, treatments = set(outcomes), set(treatments)
    if outcomes & treatments:
        raise QueryError(f"outcomes and treatments overlap: {sorted(outcomes & treatments)}")
    return graph.ancestors_avoiding(outcomes, treatments)


def derive_district(graph, district, sequence):
    """
    Fix ``sequence`` one vertex at a time starting from the observed joint
    and return ``Density(district | ∅, K)`` for the final kernel ``K``.
    """
    graph = graph.as_cadmg()
    kernel = KernelRef.observed(graph.random)
    remaining = set(graph.random) - set(district)
    if set(sequence) != remaining:
        raise NotFixableError(
            ",".join(sorted(set(sequence) ^ remaining)),
            f"sequence must cover exactly {sorted(remaining)}",
        )
    for vertex in sequence:
        if not graph.fixable(vertex):
            raise NotFixableError(vertex, "sequence is not valid at this position")
        kernel = emit_fix(kernel, graph, vertex)
        graph = graph.intervene(vertex)
    return Density(tuple(district), (), kernel)


def identify(graph, query):
    """
    Return ``Identified`` with the estimand of ``p(Y(a))``, or
    ``NotIdentified`` naming the first district without a valid sequence.
    """
    query.validate(graph, allow_proxies=False)
    if query.policies:
        raise QueryError("policy queries go through reduce_policy_query first")
    projection = graph.observed_projection().as_cadmg()
    outcomes, treatments = set(query.outcomes), query.treatment_set
    ystar = ancestral_set(projection, outcomes, treatments)
    trace = [f"Y* = {{{', '.join(sorted(ystar))}}}"]

    terms = []
    for district in projection.subgraph(ystar).districts():
        result = projection.find_valid_sequence(set(projection.random) - district)
        trace.append(
            f"district {{{', '.join(sorted(district))}}}: "
            f"sequence <{', '.join(result.sequence)}>"
            + ("" if result.ok else f" stuck at {{{', '.join(sorted(result.stuck))}}}")
        )
        if not result.ok:
            logger.info("district %s is not identified", sorted(district))
            return NotIdentified(district, result.stuck, tuple(trace))
        term = derive_district(projection, district, result.sequence)
        terms.append(plug_district(term.kernel, district, query.treatments, ystar))

    root = assemble(terms, sorted(ystar - outcomes))
    return Identified(Estimand(root), tuple(trace))


@dataclass(frozen=True)
class PolicyRecipe:
    """
    Turns the joint ``p(Y(a), {W_A(a)})`` into ``p(Y(f))``: sum over the
    policy inputs with each treatment set to its policy's value.
    """

    outcomes: tuple
    inputs: tuple
    policies: tuple

    def label(self, policy):
        label = policy.function or "f_" + policy.treatment.lower()
        return f"{label}({','.join(v.lower() for v in policy.inputs)})"

    def wrap(self, root):
        """
        Replace each treatment's label plug with its policy and sum out the
        policy inputs. A treatment without a plug in ``root`` gets one on top.
        """
        labels = {p.treatment: self.label(p) for p in self.policies}
        found = set()
        root = _relabel(root, labels, found)
        for treatment in sorted(set(labels) - found):
            root = Plug(treatment, labels[treatment], root)
        return Sum(self.inputs, root) if self.inputs else root

    def apply(self, table, functions, cards=None):
        """
        Evaluate the recipe on a numeric joint ``table`` with one axis per
        outcome, policy input and treatment. ``functions`` maps a treatment
        to a callable receiving its inputs' values in sorted-name order.
        """
        cards = dict(cards or {})
        cards.update(table.cards)
        summed = list(self.inputs)
        result = Factor(self.outcomes, np.zeros([cards[v] for v in self.outcomes]))
        for values in itertools.product(*(range(cards[v]) for v in summed)):
            point = dict(zip(summed, values))
            treatments = _resolve(self.policies, point, functions)
            sliced = table
            for v, value in sorted(point.items()) + sorted(treatments.items()):
                sliced = sliced.select(v, value)
            result = Factor(result.variables, result.values + sliced.aligned(self.outcomes))
        return result


def _relabel(node, labels, found):
    if isinstance(node, Plug):
        child = _relabel(node.child, labels, found)
        if node.var in labels and isinstance(node.value, str):
            found.add(node.var)
            return Plug(node.var, labels[node.var], child)
        return Plug(node.var, node.value, child)
    if isinstance(node, Sum):
        return Sum(node.over, _relabel(node.child, labels, found))
    if isinstance(node, Product):
        return Product(tuple(_relabel(c, labels, found) for c in node.children))
    if isinstance(node, Quotient):
        return Quotient(
            _relabel(node.numerator, labels, found), _relabel(node.denominator, labels, found)
        )
    return node


def _resolve(policies, point, functions):
    values = dict(point)
    pending = {p.treatment: p for p in policies}
    while pending:
        ready = [a for a, p in pending.items() if all(w in values for w in p.inputs)]
        if not ready:
            raise QueryError(f"policies for {sorted(pending)} depend on each other")
        for a in sorted(ready):
            policy = pending.pop(a)
            values[a] = int(functions[a](*(values[w] for w in policy.inputs)))
    return {p.treatment: values[p.treatment] for p in policies}


def reduce_policy_query(graph, query):
    """
    Rewrite a policy query as the joint query over the outcomes and every
    policy input that is not itself a treatment, plus the recipe that
    post-composes the policies.
    """
    query.validate(graph)
    if not query.policies:
        return query, None
    treated = {p.treatment for p in query.policies}
    missing = query.treatment_set - treated
    if missing:
        raise QueryError(f"treatments {sorted(missing)} have no policy")
    inputs = sorted({w for p in query.policies for w in p.inputs} - query.treatment_set)
    if set(inputs) & set(query.outcomes):
        raise QueryError(f"policy inputs {sorted(set(inputs) & set(query.outcomes))} are outcomes")
    joint = CausalQuery(
        outcomes=tuple(sorted(set(query.outcomes) | set(inputs))),
        treatments=dict(query.treatments),
        proxies=query.proxies,
    )
    return joint, PolicyRecipe(tuple(query.outcomes), tuple(inputs), tuple(query.policies))
