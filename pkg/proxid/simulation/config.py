"""
Flat ``key=value`` experiment configuration files.

Example::

    # varied A -> Y effect
    n_dgps=4
    datasets_per_dgp=64
    n=4000
    mode=gaussian
    bootstrap=64
    level=0.95
    sweep=A_Y:0,0.2,0.4,0.8
    override.U_Z=1.0
"""
from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .. import settings
from ..exceptions import ConfigError
from .estimators import ESTIMATORS
from .sem import Mode, edge_name, parse_edge

__all__ = [
    "DEFAULT_ESTIMATORS",
    "ExperimentConfig",
    "Setting",
    "load_config",
    "parse_config",
]

logger = logging.getLogger(__name__)

DEFAULT_ESTIMATORS = ("oracle", "naive_frontdoor", "simple_proximal", "proximal_frontdoor")


@dataclass(frozen=True)
class Setting:
    """
    One column group of a results table: the coefficient overrides applied
    on top of every sampled DGP.
    """

    label: str
    overrides: tuple = ()

    def as_dict(self):
        return dict(self.overrides)


@dataclass(frozen=True)
class Sweep:
    edges: tuple
    values: tuple

    @property
    def label(self):
        return "=".join(edge_name(e) for e in self.edges)


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "experiment"
    n_dgps: int = 4
    datasets_per_dgp: int = 64
    n: int = 4000
    mode: Mode = Mode.GAUSSIAN
    bootstrap: int = 0
    level: float = 0.95
    seed: int = 0
    estimators: tuple = DEFAULT_ESTIMATORS
    trajectories: int = settings.TRAJECTORIES
    overrides: tuple = ()
    sweep: Sweep | None = None

    def __post_init__(self):
        errors = []
        for key in ("n_dgps", "datasets_per_dgp", "n", "trajectories"):
            if getattr(self, key) < 1:
                errors.append(f"{key} must be at least 1")
        if self.bootstrap == 1 or self.bootstrap < 0:
            errors.append("bootstrap must be 0 (no intervals) or at least 2")
        if not 0 < self.level < 1:
            errors.append("level must lie in (0, 1)")
        for name in self.estimators:
            if name not in ESTIMATORS:
                errors.append(f"unknown estimator {name!r}")
        if not self.estimators:
            errors.append("no estimators selected")
        if errors:
            raise ConfigError("; ".join(errors))

    def settings(self):
        """
        The settings swept over; a config without a sweep has exactly one.
        """
        base = dict(self.overrides)
        if self.sweep is None:
            return (Setting("base", tuple(sorted(base.items()))),)
        result = []
        for value in self.sweep.values:
            overrides = dict(base)
            overrides.update({edge: value for edge in self.sweep.edges})
            label = f"{self.sweep.label}={value:g}"
            result.append(Setting(label, tuple(sorted(overrides.items()))))
        return tuple(result)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        return {
            "name": self.name,
            "n_dgps": self.n_dgps,
            "datasets_per_dgp": self.datasets_per_dgp,
            "n": self.n,
            "mode": self.mode.value,
            "bootstrap": self.bootstrap,
            "level": self.level,
            "seed": self.seed,
            "estimators": list(self.estimators),
            "trajectories": self.trajectories,
            "overrides": {edge_name(e): v for e, v in self.overrides},
            "sweep": None if self.sweep is None else {
                "edges": [edge_name(e) for e in self.sweep.edges],
                "values": list(self.sweep.values),
            },
        }


_INTEGERS = ("n_dgps", "datasets_per_dgp", "n", "bootstrap", "seed", "trajectories")


def _parse_sweep(value):
    edges, sep, values = value.partition(":")
    if not sep:
        raise ConfigError(f"sweep {value!r} must look like EDGE[+EDGE...]:v1,v2,...")
    parsed = tuple(float(v) for v in values.split(",") if v.strip())
    if not parsed:
        raise ConfigError(f"sweep {value!r} has no values")
    return Sweep(tuple(parse_edge(e.strip()) for e in edges.split("+")), parsed)


def parse_config(text, source=None):
    """
    Parse configuration text. Every problem is collected and reported in a
    single ``ConfigError``.
    """
    values, overrides, errors, seen = {}, {}, [], set()
    where = f"{source}: " if source else ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (part.strip() for part in line.partition("="))
        if not sep or not key:
            errors.append(f"{where}line {lineno}: expected key=value, got {raw.strip()!r}")
            continue
        if key in seen:
            errors.append(f"{where}line {lineno}: duplicate key {key!r}")
            continue
        seen.add(key)
        try:
            if key.startswith("override."):
                overrides[parse_edge(key[len("override."):])] = float(value)
            elif key in _INTEGERS:
                values[key] = int(value)
            elif key == "level":
                values[key] = float(value)
            elif key == "mode":
                values[key] = Mode(value)
            elif key == "name":
                values[key] = value
            elif key == "estimators":
                values[key] = tuple(v.strip() for v in value.split(",") if v.strip())
            elif key == "sweep":
                values[key] = _parse_sweep(value)
            else:
                errors.append(f"{where}line {lineno}: unknown key {key!r}")
        except (ValueError, ConfigError) as e:
            errors.append(f"{where}line {lineno}: bad value for {key!r}: {e}")
    if not seen and not errors:
        errors.append(f"{where}configuration is empty")
    if errors:
        raise ConfigError("; ".join(errors))
    values["overrides"] = tuple(sorted(overrides.items()))
    return ExperimentConfig(**values)


def load_config(path):
    """
    Read a configuration file; ``PROXID_SEED`` overrides its seed.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from e
    config = parse_config(text, source=path.name)
    seed = settings.master_seed(config.seed)
    if seed != config.seed:
        logger.info("seed %d from %s overrides %d", seed, settings.SEED_ENV, config.seed)
        config = config.replace(seed=seed)
    if config.name == ExperimentConfig.name:
        config = config.replace(name=path.stem)
    return config
