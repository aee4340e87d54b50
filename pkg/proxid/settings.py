"""
Package-wide defaults.

Every value here can be overridden per call; the CLI and the experiment
configuration read from this module so a single place documents them.
"""
from __future__ import annotations

import os

__all__ = [
    "BINARY_LINK_SCALE",
    "DEFAULT_CARDINALITY",
    "MAX_CONTROL_SIZE",
    "MAX_HIDDEN_SIZE",
    "MAX_PROXY_SIZE",
    "PROBABILITY_SLACK",
    "RANK_TOLERANCE",
    "RESIDUAL_TOLERANCE",
    "SEED_ENV",
    "SLOW_TESTS_ENV",
    "TRAJECTORIES",
    "TRUNCATION",
    "master_seed",
]

# discrete oracle
RESIDUAL_TOLERANCE = 1e-8
RANK_TOLERANCE = 1e-9
PROBABILITY_SLACK = 1e-9
DEFAULT_CARDINALITY = 2

# proximal search subset caps
MAX_PROXY_SIZE = 3
MAX_CONTROL_SIZE = 3
MAX_HIDDEN_SIZE = 3

# simulation
TRAJECTORIES = 100
TRUNCATION = (2.5, 97.5)
BINARY_LINK_SCALE = 0.25

SEED_ENV = "PROXID_SEED"
SLOW_TESTS_ENV = "PROXID_SLOW_TESTS"


def master_seed(default):
    """
    Return the seed from ``PROXID_SEED`` when set, otherwise ``default``.
    """
    value = os.environ.get(SEED_ENV, "").strip()
    if not value:
        return default
    try:
        return int(value)
    except ValueError:
        from .exceptions import ConfigError

        raise ConfigError(f"{SEED_ENV} must be an integer, got {value!r}")
