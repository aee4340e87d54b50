from __future__ import annotations

import logging

import numpy as np

from .. import settings
from ..exceptions import BridgeResidualError, EstimandError
from ..oracle.bridges import solve_bridge_discrete
from ..oracle.factors import Factor
from .nodes import BridgeApply, BridgeSolve, Estimand

__all__ = [
    "Evaluator",
    "evaluate",
]

logger = logging.getLogger(__name__)


class Evaluator(object):
    """
    Evaluate estimand trees against a joint table of the observed variables.

    Kernels and bridge solutions are memoized per evaluator; ``reports``
    keeps one ``BridgeReport`` per solved bridge.
    """

    def __init__(
        self,
        env,
        residual_tolerance=settings.RESIDUAL_TOLERANCE,
        rank_tolerance=settings.RANK_TOLERANCE,
        strict=True,
    ):
        self.env = env
        self.cards = env.cards
        self.residual_tolerance = residual_tolerance
        self.rank_tolerance = rank_tolerance
        self.strict = strict
        self.reports = {}
        self._kernels = {}
        self._bridges = {}

    def __call__(self, estimand):
        root = estimand.root if isinstance(estimand, Estimand) else estimand
        table = root.invoke_mapper(self)
        if self.strict and not isinstance(root, (BridgeSolve, BridgeApply)):
            slack = settings.PROBABILITY_SLACK
            low, high = float(table.values.min(initial=0.0)), float(table.values.max(initial=0.0))
            if low < -slack or high > 1 + slack:
                raise EstimandError(f"estimand leaves [0, 1]: range [{low:.3g}, {high:.3g}]")
            table = Factor(table.variables, np.clip(table.values, 0.0, 1.0))
        return table

    # kernels

    def kernel_table(self, kernel):
        cached = self._kernels.get(id(kernel))
        if cached is not None:
            return cached[1]
        if kernel.is_observed:
            missing = set(kernel.scope) - set(self.env.variables)
            if missing:
                raise EstimandError(
                    f"observed kernel mentions {sorted(missing)} absent from the data"
                )
            table = self.env.marginal(kernel.scope)
            table = Factor(table.variables, table.values)
        else:
            table = kernel.definition.invoke_mapper(self)
        self._kernels[id(kernel)] = (kernel, table)
        return table

    # node mappers

    def map_density(self, node):
        table = self.kernel_table(node.kernel)
        missing = set(node.vars) - set(table.variables)
        if missing:
            raise EstimandError(
                f"kernel over {node.kernel.scope} has no axis for {sorted(missing)}"
            )
        keep = set(node.vars) | set(node.given)
        drop = [v for v in node.kernel.scope if v in table.variables and v not in keep]
        joint = table.sum_out(drop)
        if not node.given:
            return joint
        margin = joint.sum_out(node.vars)
        return joint.divide(margin, where=f"p({','.join(node.vars)}|{','.join(node.given)})")

    def map_sum(self, node):
        return node.child.invoke_mapper(self).sum_out(node.over, self.cards)

    def map_product(self, node):
        tables = [child.invoke_mapper(self) for child in node.children]
        if not tables:
            return Factor.scalar(1.0)
        return tables[0].product(*tables[1:])

    def map_quotient(self, node):
        numerator = node.numerator.invoke_mapper(self)
        return numerator.divide(node.denominator.invoke_mapper(self), where="quotient")

    def map_plug(self, node):
        table = node.child.invoke_mapper(self)
        if isinstance(node.value, int):
            return table.select(node.var, node.value)
        return table

    def map_bridge_solve(self, node):
        cached = self._bridges.get(id(node))
        if cached is not None:
            return cached[1]
        lhs = node.lhs.invoke_mapper(self)
        rhs = node.rhs.invoke_mapper(self)
        table, report = solve_bridge_discrete(
            lhs,
            rhs,
            node.proxies,
            node.instruments,
            cards=self.cards,
            bridge_id=node.bridge_id,
            rank_tolerance=self.rank_tolerance,
        )
        self.reports[node.bridge_id] = report
        if report.residual > self.residual_tolerance:
            raise BridgeResidualError(node.bridge_id, report.residual, self.residual_tolerance)
        self._bridges[id(node)] = (node, table)
        return table

    def map_bridge_apply(self, node):
        table = node.solve.invoke_mapper(self)
        return table.rename(dict(node.bindings))


def evaluate(estimand, env, **kwargs):
    return Evaluator(env, **kwargs)(estimand)
