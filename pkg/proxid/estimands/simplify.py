"""
Syntactic, evaluation-preserving rewrites of estimand trees.
"""
from __future__ import annotations

import logging
from dataclasses import replace

from .nodes import (
    BridgeApply,
    BridgeSolve,
    Density,
    Estimand,
    KernelRef,
    Plug,
    Product,
    Quotient,
    Sum,
    free_variables,
)

__all__ = [
    "Simplifier",
    "simplify",
]

logger = logging.getLogger(__name__)

ONE = Product(())

MAX_PASSES = 64


def _factors(node):
    if isinstance(node, Product):
        return list(node.children)
    return [node]


def _product(factors):
    flat = []
    for f in factors:
        if isinstance(f, Product):
            flat.extend(f.children)
        else:
            flat.append(f)
    if len(flat) == 1:
        return flat[0]
    return Product(tuple(flat))


class Simplifier(object):
    """
    Rewrite a tree to a fixpoint of the rules:

    * sums absorbed into densities and pushed into the single product
      factor that mentions the summed variable;
    * identical numerator and denominator factors cancelled;
    * plugs dropped where the variable is not free, else pushed down;
    * nested products and sums flattened;
    * ``Density(K.scope | ∅, K)`` replaced by the definition of ``K``.

    Kernel definitions and bridge equations are rewritten once each, so
    shared subtrees stay shared.
    """

    def __init__(self, inline_kernels=True):
        self.inline_kernels = inline_kernels
        self._kernels = {}
        self._bridges = {}

    def __call__(self, estimand):
        if isinstance(estimand, Estimand):
            return Estimand(self.rewrite(estimand.root), estimand.ledger)
        return self.rewrite(estimand)

    def rewrite(self, node):
        for _ in range(MAX_PASSES):
            simpler = self.visit(node)
            if simpler == node:
                return simpler
            node = simpler
        logger.debug("simplify stopped after %d passes", MAX_PASSES)
        return node

    # shared subtrees

    def kernel(self, kernel):
        if kernel.is_observed:
            return kernel
        cached = self._kernels.get(id(kernel))
        if cached is None:
            cached = (kernel, replace(kernel, definition=self.rewrite(kernel.definition)))
            self._kernels[id(kernel)] = cached
        return cached[1]

    def bridge(self, solve):
        cached = self._bridges.get(id(solve))
        if cached is None:
            rhs = solve.rhs
            rhs = Density(rhs.vars, rhs.given, self.kernel(rhs.kernel))
            cached = (solve, replace(solve, lhs=self.rewrite(solve.lhs), rhs=rhs))
            self._bridges[id(solve)] = cached
        return cached[1]

    # rules

    def visit(self, node):
        if isinstance(node, Density):
            kernel = self.kernel(node.kernel)
            if (
                self.inline_kernels
                and not kernel.is_observed
                and not node.given
                and node.vars == kernel.scope
            ):
                return kernel.definition
            return Density(node.vars, node.given, kernel)
        if isinstance(node, Sum):
            return self.visit_sum(node.over, self.visit(node.child))
        if isinstance(node, Product):
            factors = [self.visit(c) for c in node.children]
            return _product([f for f in factors if f != ONE])
        if isinstance(node, Quotient):
            return self.visit_quotient(self.visit(node.numerator), self.visit(node.denominator))
        if isinstance(node, Plug):
            return self.visit_plug(node.var, node.value, self.visit(node.child))
        if isinstance(node, BridgeSolve):
            return self.bridge(node)
        if isinstance(node, BridgeApply):
            return BridgeApply(self.bridge(node.solve), node.bindings)
        return node

    def visit_sum(self, over, child):
        over = list(over)
        if not over:
            return child
        if isinstance(child, Sum) and not set(over) & set(child.over):
            return Sum(tuple(over) + child.over, child.child)
        if isinstance(child, Density):
            absorbed = [v for v in over if v in child.vars]
            if absorbed:
                rest = [v for v in child.vars if v not in absorbed]
                remaining = [v for v in over if v not in absorbed]
                reduced = Density(rest, child.given, child.kernel) if rest else ONE
                return Sum(tuple(remaining), reduced) if remaining else reduced
            return Sum(tuple(over), child)
        if isinstance(child, Product):
            factors = list(child.children)
            kept = []
            for v in over:
                mentions = [i for i, f in enumerate(factors) if v in free_variables(f)]
                if len(mentions) == 1 and len(factors) > 1:
                    i = mentions[0]
                    factors[i] = self.visit_sum([v], factors[i])
                else:
                    kept.append(v)
            factors = [f for f in factors if f != ONE]
            body = _product(factors) if factors else ONE
            return Sum(tuple(kept), body) if kept else body
        return Sum(tuple(over), child)

    def visit_quotient(self, numerator, denominator):
        top, bottom = _factors(numerator), _factors(denominator)
        for factor in list(bottom):
            if factor in top:
                top.remove(factor)
                bottom.remove(factor)
        top = [f for f in top if f != ONE]
        bottom = [f for f in bottom if f != ONE]
        numerator = _product(top) if top else ONE
        if not bottom:
            return numerator
        return Quotient(numerator, _product(bottom))

    def visit_plug(self, var, value, child):
        if var not in free_variables(child):
            return child
        if isinstance(child, Product):
            return Product(
                tuple(
                    self.visit_plug(var, value, c) if var in free_variables(c) else c
                    for c in child.children
                )
            )
        if isinstance(child, Sum):
            return Sum(child.over, self.visit_plug(var, value, child.child))
        if isinstance(child, Quotient):
            return Quotient(
                self.visit_plug(var, value, child.numerator),
                self.visit_plug(var, value, child.denominator),
            )
        return Plug(var, value, child)


def simplify(estimand, inline_kernels=True):
    return Simplifier(inline_kernels=inline_kernels)(estimand)
