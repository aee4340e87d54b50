from __future__ import annotations

from .bridges import BridgeReport, rank_completeness_check, solve_bridge_discrete  # noqa
from .factors import DiscreteDistribution, Factor  # noqa
from .scm import DiscreteScm, random_scm  # noqa
