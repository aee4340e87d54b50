"""
Bridge equations over finite cardinalities.

Within each stratum of the non-proxy signature variables the equation
``lhs(z) = Σ_m b(m) K(z, m)`` is a linear system with one row per
instrument configuration and one column per proxy configuration.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .. import settings
from ..exceptions import EstimandError
from .factors import Factor

__all__ = [
    "BridgeReport",
    "rank_completeness_check",
    "solve_bridge_discrete",
    "stratum_matrices",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BridgeReport:
    bridge_id: str
    residual: float
    rank_ok: bool
    condition: float
    strata: int


def _cards(*factors, extra=None):
    cards = dict(extra or {})
    for f in factors:
        cards.update(f.cards)
    return cards


def stratum_matrices(rhs, proxies, instruments, strata, cards):
    """
    Stack the kernel ``rhs`` into matrices of shape
    ``(*strata, rows=instruments, cols=proxies)``.
    """
    order = tuple(strata) + tuple(instruments) + tuple(proxies)
    table = rhs.expand(order, cards).values
    lead = table.shape[: len(strata)]
    rows = math.prod(cards[v] for v in instruments)
    cols = math.prod(cards[v] for v in proxies)
    return table.reshape(lead + (rows, cols))


def rank_completeness_check(matrices, tolerance=settings.RANK_TOLERANCE):
    """
    True iff every stratum matrix has full column rank: at least as many
    rows as columns and smallest singular value above ``tolerance`` times
    the largest.
    """
    matrices = np.asarray(matrices, dtype=float)
    if matrices.ndim < 2:
        raise EstimandError("rank check needs a matrix or a stack of matrices")
    rows, cols = matrices.shape[-2:]
    if rows < cols:
        return False
    singular = np.linalg.svd(matrices, compute_uv=False)
    return bool(np.all(singular[..., -1] > tolerance * singular[..., 0]))


def _condition(matrices):
    singular = np.linalg.svd(matrices, compute_uv=False)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = singular[..., 0] / singular[..., -1]
    ratios = np.where(np.isnan(ratios), np.inf, ratios)
    return float(np.max(ratios)) if ratios.size else 1.0


def solve_bridge_discrete(
    lhs,
    rhs,
    proxies,
    instruments,
    cards=None,
    bridge_id="b",
    rank_tolerance=settings.RANK_TOLERANCE,
):
    """
    Minimum-norm least-squares solution of the bridge equation in every
    stratum. Returns the bridge table over ``strata + proxies`` and a report
    with the max-abs residual, the rank verdict and the worst condition
    number.
    """
    proxies, instruments = tuple(proxies), tuple(instruments)
    if set(proxies) & set(lhs.variables):
        raise EstimandError(f"bridge {bridge_id}: outcome side mentions proxies {proxies}")
    cards = _cards(lhs, rhs, extra=cards)
    for v in proxies + instruments:
        if v not in cards:
            raise EstimandError(f"bridge {bridge_id}: unknown cardinality of {v!r}")
    strata = [v for v in lhs.variables if v not in instruments]
    strata += [v for v in rhs.variables if v not in instruments + proxies and v not in strata]

    matrices = stratum_matrices(rhs, proxies, instruments, strata, cards)
    rows = math.prod(cards[v] for v in instruments)
    target = lhs.expand(tuple(strata) + instruments, cards).values
    target = target.reshape(target.shape[: len(strata)] + (rows, 1))

    solution = np.linalg.pinv(matrices) @ target
    residual = float(np.max(np.abs(matrices @ solution - target))) if target.size else 0.0
    rank_ok = rank_completeness_check(matrices, rank_tolerance)
    report = BridgeReport(
        bridge_id=bridge_id,
        residual=residual,
        rank_ok=rank_ok,
        condition=_condition(matrices),
        strata=int(math.prod(matrices.shape[:-2])),
    )
    logger.debug("solved %s: %s", bridge_id, report)

    shape = matrices.shape[:-2] + tuple(cards[v] for v in proxies)
    return Factor(tuple(strata) + proxies, solution.reshape(shape)), report
