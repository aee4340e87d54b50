from __future__ import annotations

from .config import ExperimentConfig, Setting, load_config, parse_config  # noqa
from .estimators import (  # noqa
    ESTIMATORS,
    BootstrapInterval,
    GmmSpec,
    bootstrap_ci,
    estimate,
    fit_linear_bridge,
    fit_proximal_frontdoor,
)
from .experiment import MetricReport, run_experiment, write_results  # noqa
from .sem import EDGES, LinearSem, Mode, sample_dataset, sample_dgp, true_ate  # noqa
from .tables import read_results, render_table  # noqa
