"""
Compare an estimand against interventional truth on random discrete SCMs.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .. import settings
from ..estimands.evaluate import Evaluator
from ..exceptions import EstimandError, PositivityError
from .scm import random_scm

__all__ = [
    "CONDITION_LIMIT",
    "TrialResult",
    "VerificationReport",
    "query_truth",
    "verify_trials",
]

logger = logging.getLogger(__name__)

CONDITION_LIMIT = None


@dataclass(frozen=True)
class TrialResult:
    index: int
    error: float | None
    skipped: str = ""


@dataclass(frozen=True)
class VerificationReport:
    trials: int
    tolerance: float
    results: tuple = ()
    failure: object = field(default=None, repr=False)

    @property
    def evaluated(self):
        return tuple(r for r in self.results if not r.skipped)

    @property
    def skipped(self):
        return len(self.results) - len(self.evaluated)

    def skipped_for(self, reason):
        return sum(1 for r in self.results if r.skipped.startswith(reason))

    @property
    def max_error(self):
        errors = [r.error for r in self.evaluated]
        return max(errors) if errors else 0.0

    @property
    def rank_pass_rate(self):
        if not self.results:
            return 1.0
        return 1.0 - self.skipped_for("rank") / len(self.results)

    @property
    def ok(self):
        return self.failure is None and self.max_error <= self.tolerance

    def summary(self):
        text = (
            f"trials={self.trials} evaluated={len(self.evaluated)} skipped={self.skipped} "
            f"max_error={self.max_error:.3e} rank_pass_rate={self.rank_pass_rate:.3f}"
        )
        conditioned = self.skipped_for("condition")
        return text + (f" ill_conditioned={conditioned}" if conditioned else "")


def query_truth(scm, query):
    """
    p(Y(a)) from the full SCM, with one axis per outcome and per treatment.
    """
    return scm.kernel(do=query.treatment_set, keep=query.outcomes)


def verify_trials(
    graph,
    query,
    estimand,
    trials=100,
    seed=0,
    cards=None,
    floor=0.05,
    severed=(),
    tolerance=settings.RESIDUAL_TOLERANCE,
    condition_limit=CONDITION_LIMIT,
    truth=query_truth,
):
    """
    Evaluate ``estimand`` on the observed law of ``trials`` random SCMs over
    ``graph`` and compare with ``truth(scm, query)``.

    Trials whose bridge systems fail the rank check or hit a zero-mass
    stratum are skipped and counted. A ``condition_limit`` also skips
    full-rank systems whose condition number exceeds it; those are counted
    apart from the rank failures. The first SCM whose error exceeds ``tolerance`` is kept in the
    report for replay.
    """
    results, failure = [], None
    for index in range(trials):
        scm = random_scm(graph, cards=cards, seed=[seed, index], floor=floor)
        for parent, child in severed:
            scm = scm.sever(parent, child)
        evaluator = Evaluator(scm.observed())
        try:
            estimate = evaluator(estimand)
        except PositivityError as e:
            results.append(TrialResult(index, None, skipped=f"positivity: {e}"))
            continue
        except EstimandError as e:
            if not all(r.rank_ok for r in evaluator.reports.values()):
                results.append(TrialResult(index, None, skipped="rank"))
                continue
            logger.warning("trial %d failed to evaluate: %s", index, e)
            results.append(TrialResult(index, float("inf")))
            failure = failure or scm
            continue
        reports = evaluator.reports.values()
        if not all(r.rank_ok for r in reports):
            logger.debug("trial %d skipped: rank-deficient bridge system", index)
            results.append(TrialResult(index, None, skipped="rank"))
            continue
        if condition_limit is not None and any(r.condition > condition_limit for r in reports):
            logger.debug("trial %d skipped: ill-conditioned bridge system", index)
            results.append(TrialResult(index, None, skipped="condition"))
            continue
        error = estimate.max_abs_diff(truth(scm, query))
        if not np.isfinite(error):
            error = float("inf")
        results.append(TrialResult(index, error))
        if error > tolerance and failure is None:
            logger.warning("trial %d exceeds tolerance: error %.3e", index, error)
            failure = scm
    if not trials:
        logger.warning("no trials requested; verification is vacuous")
    return VerificationReport(trials, tolerance, tuple(results), failure)
