"""
The simulation grid: settings x DGPs x datasets, every estimator on every
dataset, aggregated into bias and coverage metrics.
"""
from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from ..exceptions import EstimationError
from .config import ExperimentConfig
from .estimators import ESTIMATORS, bootstrap_ci, estimate
from .sem import sample_dataset, sample_dgp, true_ate

__all__ = [
    "CellResult",
    "EstimatorMetrics",
    "MetricReport",
    "run_experiment",
    "write_results",
]

logger = logging.getLogger(__name__)

# seed streams under (seed, dgp, dataset)
DATA, ESTIMATE, BOOTSTRAP, TRUTH = range(4)


@dataclass(frozen=True)
class CellResult:
    setting: str
    dgp: int
    dataset: int
    estimator: str
    truth: float
    estimate: float = math.nan
    low: float = math.nan
    high: float = math.nan
    resample_failures: int = 0
    error: str = ""

    @property
    def failed(self):
        return bool(self.error)

    @property
    def covered(self):
        if math.isnan(self.low):
            return math.nan
        return float(self.low <= self.truth <= self.high)


@dataclass(frozen=True)
class EstimatorMetrics:
    setting: str
    estimator: str
    label: str
    mean_absolute_bias: float
    percent_absolute_bias: float
    coverage: float
    width: float
    evaluated: int
    failures: int


@dataclass(frozen=True)
class _Task:
    config: ExperimentConfig
    setting: int
    dgp: int
    dataset: int
    truth: float


def _run_task(task):
    config = task.config
    setting = config.settings()[task.setting]
    sem = sample_dgp([config.seed, task.dgp], config.mode, setting.as_dict())
    base = [config.seed, task.dgp, task.dataset]
    data = sample_dataset(sem, config.n, base + [0, DATA])
    results = []
    for stream, name in enumerate(config.estimators):
        coordinates = dict(
            setting=setting.label, dgp=task.dgp, dataset=task.dataset, estimator=name
        )
        try:
            rng = np.random.default_rng(base + [0, ESTIMATE, stream])
            point = estimate(name, data, rng, trajectories=config.trajectories)
            interval = None
            if config.bootstrap:
                interval = bootstrap_ci(
                    name,
                    data,
                    resamples=config.bootstrap,
                    level=config.level,
                    seed=base + [BOOTSTRAP, stream],
                    trajectories=config.trajectories,
                )
        except EstimationError as e:
            logger.warning("cell %s failed: %s", coordinates, e)
            results.append(CellResult(truth=task.truth, error=str(e), **coordinates))
            continue
        results.append(
            CellResult(
                truth=task.truth,
                estimate=point,
                low=interval.low if interval else math.nan,
                high=interval.high if interval else math.nan,
                resample_failures=interval.failures if interval else 0,
                **coordinates,
            )
        )
    return results


def _metrics(setting, name, cells, truths):
    """
    Bias metrics average over DGPs the absolute mean error over that DGP's
    datasets; the percent variant divides each DGP's term by its |truth|.
    """
    good = [c for c in cells if not c.failed]
    absolute, relative = [], []
    for dgp, truth in sorted(truths.items()):
        errors = [c.estimate - c.truth for c in good if c.dgp == dgp]
        if not errors:
            continue
        bias = abs(float(np.mean(errors)))
        absolute.append(bias)
        relative.append(bias / abs(truth) if truth else math.nan)
    covered = [c.covered for c in good if not math.isnan(c.covered)]
    widths = [c.high - c.low for c in good if not math.isnan(c.low)]
    return EstimatorMetrics(
        setting=setting,
        estimator=name,
        label=ESTIMATORS[name].label,
        mean_absolute_bias=float(np.mean(absolute)) if absolute else math.nan,
        percent_absolute_bias=float(np.mean(relative)) if relative else math.nan,
        coverage=float(np.mean(covered)) if covered else math.nan,
        width=float(np.mean(widths)) if widths else math.nan,
        evaluated=len(good),
        failures=len(cells) - len(good),
    )


@dataclass(frozen=True)
class MetricReport:
    config: ExperimentConfig
    metrics: tuple
    cells: tuple = field(repr=False)
    truths: dict = field(default_factory=dict, repr=False)

    @property
    def failures(self):
        return tuple(c for c in self.cells if c.failed)

    def metric(self, setting, estimator):
        for m in self.metrics:
            if m.setting == setting and m.estimator == estimator:
                return m
        raise KeyError((setting, estimator))

    def to_frame(self):
        return pd.DataFrame([vars(m) for m in self.metrics])

    def cell_frame(self):
        return pd.DataFrame([vars(c) for c in self.cells])

    def to_dict(self):
        return {
            "config": self.config.to_dict(),
            "metrics": [_json_ready(vars(m)) for m in self.metrics],
            "truths": {
                setting: {str(dgp): truth for dgp, truth in sorted(values.items())}
                for setting, values in self.truths.items()
            },
            "failures": [
                {k: getattr(c, k) for k in ("setting", "dgp", "dataset", "estimator", "error")}
                for c in self.failures
            ],
        }


def _json_ready(values):
    return {k: None if isinstance(v, float) and math.isnan(v) else v for k, v in values.items()}


def _map(tasks, jobs):
    if jobs <= 1:
        return [_run_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as executor:
        return list(executor.map(_run_task, tasks))


def run_experiment(config, jobs=1):
    """
    Execute the full grid. Every random draw is seeded from the cell's
    coordinates, so the report does not depend on ``jobs``.
    """
    settings = config.settings()
    truths, tasks = {}, []
    for s, setting in enumerate(settings):
        truths[setting.label] = {}
        for dgp in range(config.n_dgps):
            sem = sample_dgp([config.seed, dgp], config.mode, setting.as_dict())
            truth = true_ate(sem, seed=[config.seed, dgp, 0, 0, TRUTH])
            truths[setting.label][dgp] = truth
            logger.info("setting %s, dgp %d: true effect %.4f", setting.label, dgp, truth)
            tasks.extend(
                _Task(config, s, dgp, dataset, truth) for dataset in range(config.datasets_per_dgp)
            )
    cells = tuple(cell for batch in _map(tasks, jobs) for cell in batch)
    metrics = []
    for setting in settings:
        for name in config.estimators:
            selected = [c for c in cells if c.setting == setting.label and c.estimator == name]
            metrics.append(_metrics(setting.label, name, selected, truths[setting.label]))
    return MetricReport(config, tuple(metrics), cells, truths)


def write_results(report, directory):
    """
    Write ``results.csv``, ``estimates.csv`` and ``report.json`` into
    ``directory`` and return their paths.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    results = directory / "results.csv"
    estimates = directory / "estimates.csv"
    summary = directory / "report.json"
    report.to_frame().to_csv(results, index=False)
    report.cell_frame().to_csv(estimates, index=False)
    summary.write_text(json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n", "utf-8")
    return results, estimates, summary
