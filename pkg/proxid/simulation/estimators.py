"""
ATE estimators for the proximal front-door graph.

Each estimator takes a dataset (a DataFrame with columns ``C, Z, A, M, W, Y``
and, for the oracle only, ``U``) and returns a point estimate of
E[Y(1)] - E[Y(0)]. Models are linear without interactions, matching the
data-generating process.
"""
from __future__ import annotations

import functools
import importlib.resources
import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
import statsmodels.api as sm
from statsmodels.sandbox.regression.gmm import LinearIVGMM
from statsmodels.tools.sm_exceptions import PerfectSeparationError

from .. import settings
from ..estimands.evaluate import Evaluator
from ..exceptions import ConfigError, EstimandError, EstimationError
from ..models import CausalQuery
from ..oracle.factors import DiscreteDistribution

__all__ = [
    "ESTIMATORS",
    "BootstrapInterval",
    "BridgeFit",
    "Estimator",
    "GmmSpec",
    "ProximalFrontDoorFit",
    "bootstrap_ci",
    "discrete_bridge",
    "estimate",
    "fit_linear_bridge",
    "fit_proximal_frontdoor",
    "mask_hidden",
    "naive_frontdoor",
    "oracle_backdoor",
    "proximal_frontdoor",
    "simple_proximal",
]

logger = logging.getLogger(__name__)

HIDDEN = ("U",)
DEGENERATE_PROPENSITY = 1e-6
INTERCEPT = "const"


def mask_hidden(data):
    return data.drop(columns=[c for c in HIDDEN if c in data.columns])


def _require(data, columns):
    missing = [c for c in columns if c not in data.columns]
    if missing:
        raise EstimationError(f"dataset is missing columns {missing}")


def _design(data, columns):
    _require(data, columns)
    return sm.add_constant(data[list(columns)].astype(float), has_constant="add")


def _ols(data, outcome, regressors):
    _require(data, [outcome])
    try:
        return sm.OLS(data[outcome].astype(float), _design(data, regressors)).fit()
    except np.linalg.LinAlgError as e:
        raise EstimationError(f"OLS of {outcome} on {list(regressors)} failed: {e}") from e


def _logit(data, outcome, regressors):
    _require(data, [outcome])
    try:
        model = sm.Logit(data[outcome].astype(float), _design(data, regressors)).fit(disp=0)
    except (PerfectSeparationError, np.linalg.LinAlgError) as e:
        raise EstimationError(f"logistic model of {outcome} failed: {e}") from e
    fitted = model.predict()
    if np.all(fitted < DEGENERATE_PROPENSITY) or np.all(fitted > 1 - DEGENERATE_PROPENSITY):
        raise EstimationError(f"propensity model of {outcome} is degenerate")
    return model


def _is_binary(series):
    return bool(series.isin((0, 1)).all())


# ########################################################################### #
# GMM bridge functions
# ########################################################################### #


@dataclass(frozen=True)
class GmmSpec:
    """
    A linear bridge ``E[outcome - b'basis | instruments] = 0``; both vectors
    carry an intercept.
    """

    outcome: str
    basis: tuple[str, ...]
    instruments: tuple[str, ...]

    def __post_init__(self):
        if len(self.instruments) < len(self.basis):
            raise ConfigError(
                f"bridge for {self.outcome} has {len(self.basis) + 1} unknowns but only "
                f"{len(self.instruments) + 1} instruments"
            )


@dataclass(frozen=True)
class BridgeFit:
    spec: GmmSpec
    params: pd.Series
    moment_norm: float

    def predict(self, frame):
        design = _design(frame, self.spec.basis)
        return design.to_numpy() @ self.params.to_numpy()


def fit_linear_bridge(data, spec, weights=None):
    """
    Two-step GMM for ``spec`` with an identity first-step weight matrix.

    ``weights`` reweights the sample: every moment contribution of row ``i``
    is multiplied by ``weights[i]``.
    """
    _require(data, (spec.outcome,) + spec.basis + spec.instruments)
    endog = data[spec.outcome].to_numpy(dtype=float)
    exog = _design(data, spec.basis)
    instruments = _design(data, spec.instruments).to_numpy()
    if weights is not None:
        instruments = instruments * np.asarray(weights, dtype=float)[:, None]
    model = LinearIVGMM(endog, exog.to_numpy(), instruments)
    try:
        result = model.fit(
            start_params=np.zeros(exog.shape[1]),
            maxiter=2,
            inv_weights=np.eye(instruments.shape[1]),
        )
    except np.linalg.LinAlgError as e:
        raise EstimationError(f"GMM for bridge of {spec.outcome} failed: {e}") from e
    params = np.asarray(result.params, dtype=float)
    if not np.all(np.isfinite(params)):
        raise EstimationError(f"GMM for bridge of {spec.outcome} did not converge")
    moments = model.momcond(params).mean(axis=0)
    return BridgeFit(spec, pd.Series(params, index=exog.columns), float(np.linalg.norm(moments)))


# ########################################################################### #
# estimators
# ########################################################################### #


def oracle_backdoor(data, rng=None):
    """
    Backdoor adjustment for ``Z, U, C`` with access to the hidden confounder.
    """
    return float(_ols(data, "Y", ("A", "Z", "U", "C")).params["A"])


def naive_frontdoor(data, rng=None):
    """
    The front-door plug-in adjusting for ``C``: the effect of ``A`` on ``M``
    times the effect of ``M`` on ``Y`` given ``A`` and ``C``.
    """
    outcome = _ols(data, "Y", ("M", "A", "C"))
    mediator = _ols(data, "M", ("A", "C"))
    return float(outcome.params["M"] * mediator.params["A"])


SIMPLE_PROXIMAL = GmmSpec("Y", basis=("W", "A", "C"), instruments=("Z", "A", "C"))
FRONTDOOR_BRIDGE = GmmSpec("Y", basis=("W", "A", "C", "M"), instruments=("Z", "A", "C", "M"))


def simple_proximal(data, rng=None):
    """
    The proximal g-formula with outcome proxy ``W`` and treatment proxy ``Z``.
    """
    return float(fit_linear_bridge(data, SIMPLE_PROXIMAL).params["A"])


@dataclass(frozen=True)
class ProximalFrontDoorFit:
    """
    The fitted pieces of the proximal front-door pipeline.
    """

    mediator: object
    treatment: object
    proxy: object
    proxy_scale: float
    bridge: BridgeFit
    weights: np.ndarray = field(repr=False)
    binary_mediator: bool = False
    mediator_scale: float = 0.0

    def sample_mediator(self, frame, a, noise):
        design = _design(frame.assign(A=float(a)), ("A", "Z", "C")).to_numpy()
        mean = design @ np.asarray(self.mediator.params)
        if self.binary_mediator:
            return (noise < 1.0 / (1.0 + np.exp(-mean))).astype(float)
        return mean + self.mediator_scale * noise

    def sample_trajectories(self, frame, rng, trajectories=settings.TRAJECTORIES):
        """
        Average ``Y(1) - Y(0)`` over ``trajectories`` draws per row, sharing
        the random numbers between the two arms.
        """
        n = len(frame)
        treated = np.asarray(self.treatment.predict(_design(frame, ("Z", "C"))))
        total = 0.0
        for _ in range(trajectories):
            a_tilde = (rng.random(n) < treated).astype(float)
            m_noise = rng.random(n) if self.binary_mediator else rng.standard_normal(n)
            w_noise = rng.standard_normal(n)
            arms = []
            for a in (0, 1):
                m = self.sample_mediator(frame, a, m_noise)
                rows = frame.assign(M=m, A=a_tilde)
                w = np.asarray(self.proxy.predict(_design(rows, ("M", "A", "Z", "C"))))
                w = w + self.proxy_scale * w_noise
                arms.append(self.bridge.predict(frame.assign(W=w, A=float(a), M=m)))
            total += float(np.mean(arms[1] - arms[0]))
        return total / trajectories


def _mediator_weights(data):
    m = data["M"].astype(float)
    if _is_binary(data["M"]):
        model = _logit(data, "M", ("A", "Z", "C"))
        p1 = np.asarray(model.predict())
        conditional = np.where(m == 1, p1, 1 - p1)
        marginal = np.where(m == 1, m.mean(), 1 - m.mean())
        return model, marginal / conditional, 0.0
    model = _ols(data, "M", ("A", "Z", "C"))
    scale = float(np.sqrt(model.mse_resid))
    spread = float(m.std())
    if scale <= 0 or spread <= 0:
        raise EstimationError("mediator has no residual variation")
    residual = np.asarray(model.resid) / scale
    centred = (m.to_numpy() - m.mean()) / spread
    weights = (scale / spread) * np.exp(0.5 * (residual**2 - centred**2))
    return model, weights, scale


def fit_proximal_frontdoor(data, truncation=settings.TRUNCATION):
    """
    Fit the mediator propensity, reweight it away with truncated stabilized
    weights, solve the bridge by weighted GMM and fit the treatment
    propensity and the proxy regression used for trajectory sampling.
    """
    _require(data, ("C", "Z", "A", "M", "W", "Y"))
    mediator, weights, mediator_scale = _mediator_weights(data)
    low, high = np.percentile(weights, truncation)
    weights = np.clip(weights, low, high)
    bridge = fit_linear_bridge(data, FRONTDOOR_BRIDGE, weights=weights)
    treatment = _logit(data, "A", ("Z", "C"))
    proxy = _ols(data, "W", ("M", "A", "Z", "C"))
    logger.debug("front-door bridge %s, moment norm %.3e", dict(bridge.params), bridge.moment_norm)
    return ProximalFrontDoorFit(
        mediator=mediator,
        treatment=treatment,
        proxy=proxy,
        proxy_scale=float(np.sqrt(proxy.mse_resid)),
        bridge=bridge,
        weights=weights,
        binary_mediator=_is_binary(data["M"]),
        mediator_scale=mediator_scale,
    )


def proximal_frontdoor(data, rng=None, trajectories=settings.TRAJECTORIES):
    rng = rng if rng is not None else np.random.default_rng(0)
    fit = fit_proximal_frontdoor(data)
    frame = data[["C", "Z", "A", "M", "W", "Y"]].astype(float)
    return fit.sample_trajectories(frame, rng, trajectories)


@functools.cache
def _frontdoor_estimand():
    from ..identification.proximal import proximal_identify
    from ..parsers import parse_graph

    asset = importlib.resources.files("proxid").joinpath("assets", "proximal_frontdoor.graph")
    text = asset.read_text("utf-8")
    graph = parse_graph(text, source="proximal_frontdoor.graph")
    query = CausalQuery(outcomes=("Y",), treatments={"A": "a"}, proxies=("W",))
    result = proximal_identify(graph, query)
    if not result.identified:
        raise EstimationError(result.describe())
    return result.estimand


def discrete_bridge(data, rng=None):
    """
    Evaluate the identified proximal front-door estimand on the empirical
    joint of binary data, solving the bridge as a linear system.
    """
    columns = ("A", "C", "M", "W", "Y", "Z")
    _require(data, columns)
    if not all(_is_binary(data[c]) for c in columns):
        raise EstimationError("the discrete bridge estimator needs binary columns")
    joint = DiscreteDistribution.from_frame(data, columns, {c: 2 for c in columns})
    evaluator = Evaluator(joint, residual_tolerance=np.inf, strict=False)
    try:
        table = evaluator(_frontdoor_estimand())
    except EstimandError as e:
        raise EstimationError(f"discrete bridge evaluation failed: {e}") from e
    values = table.expand(("A", "Y"), joint.cards).values
    return float(values[1, 1] - values[0, 1])


# ########################################################################### #
# registry and bootstrap
# ########################################################################### #


@dataclass(frozen=True)
class Estimator:
    name: str
    label: str
    function: object = field(repr=False)
    uses_hidden: bool = False
    options: tuple = ()

    def __call__(self, data, rng=None, **options):
        frame = data if self.uses_hidden else mask_hidden(data)
        accepted = {k: v for k, v in options.items() if k in self.options}
        return self.function(frame, rng=rng, **accepted)


ESTIMATORS = {
    e.name: e
    for e in (
        Estimator("oracle", "Oracle Backdoor", oracle_backdoor, uses_hidden=True),
        Estimator("naive_frontdoor", "Naive Front-Door", naive_frontdoor),
        Estimator("simple_proximal", "Simple Proximal", simple_proximal),
        Estimator(
            "proximal_frontdoor",
            "Proximal Front-Door",
            proximal_frontdoor,
            options=("trajectories",),
        ),
        Estimator("discrete_bridge", "Discrete Bridge", discrete_bridge),
    )
}


def _lookup(name):
    try:
        return ESTIMATORS[name]
    except KeyError:
        raise ConfigError(f"unknown estimator {name!r}; choose from {sorted(ESTIMATORS)}") from None


def estimate(name, data, rng=None, **options):
    """
    Run estimator ``name``; options it does not accept are ignored.
    """
    return _lookup(name)(data, rng=rng, **options)


@dataclass(frozen=True)
class BootstrapInterval:
    low: float
    high: float
    successes: int
    failures: int = 0

    @property
    def width(self):
        return self.high - self.low

    def covers(self, value):
        return self.low <= value <= self.high


def bootstrap_ci(name, data, resamples=64, level=0.95, seed=0, **options):
    """
    Percentile interval from ``resamples`` row resamples drawn with
    replacement. Failed resamples are logged and counted.
    """
    estimator = _lookup(name)
    if resamples < 2:
        raise ConfigError(f"bootstrap needs at least 2 resamples, got {resamples}")
    if not 0 < level < 1:
        raise ConfigError(f"interval level must lie in (0, 1), got {level}")
    estimates, failures = [], 0
    n = len(data)
    for index in range(resamples):
        rng = np.random.default_rng([*np.atleast_1d(seed).tolist(), index])
        sample = data.iloc[rng.integers(0, n, size=n)].reset_index(drop=True)
        try:
            estimates.append(estimator(sample, rng=rng, **options))
        except EstimationError as e:
            logger.info("bootstrap resample %d of %s failed: %s", index, name, e)
            failures += 1
    if len(estimates) < 2:
        raise EstimationError(
            f"only {len(estimates)} of {resamples} bootstrap resamples of {name} succeeded"
        )
    tail = 50 * (1 - level)
    low, high = np.percentile(estimates, (tail, 100 - tail))
    return BootstrapInterval(float(low), float(high), len(estimates), failures)
