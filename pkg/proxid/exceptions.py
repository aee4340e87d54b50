from __future__ import annotations

__all__ = [
    "BridgeResidualError",
    "ConfigError",
    "EstimandError",
    "EstimationError",
    "GraphError",
    "GraphParseError",
    "NotFixableError",
    "PositivityError",
    "ProxidError",
    "QueryError",
]


class ProxidError(Exception):
    """
    Base class of every error raised by proxid.
    """


class GraphError(ProxidError, ValueError):
    """
    A graph value or graph operation violates its preconditions.
    """


class GraphParseError(GraphError):
    """
    A graph text file could not be parsed.

    ``line`` is the 1-based line number of the offending declaration.
    """

    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        where = f"line {line}: " if line is not None else ""
        if source:
            where = f"{source}:{where}"
        super(GraphParseError, self).__init__(f"{where}{message}")


class NotFixableError(GraphError):
    def __init__(self, vertex, reason):
        self.vertex = vertex
        super(NotFixableError, self).__init__(f"vertex {vertex!r} is not fixable: {reason}")


class QueryError(ProxidError, ValueError):
    """
    A causal query is malformed or does not fit its graph.
    """


class EstimandError(ProxidError):
    """
    An estimand tree is malformed or cannot be evaluated.
    """


class PositivityError(EstimandError):
    """
    A quotient or conditional divided by a stratum of zero mass.
    """

    def __init__(self, stratum, where=""):
        self.stratum = dict(stratum)
        shown = ", ".join(f"{k}={v}" for k, v in sorted(self.stratum.items())) or "<empty>"
        suffix = f" in {where}" if where else ""
        super(PositivityError, self).__init__(f"zero-mass stratum ({shown}){suffix}")


class BridgeResidualError(EstimandError):
    """
    A bridge system has no solution within the residual tolerance.
    """

    def __init__(self, bridge_id, residual, tolerance):
        self.bridge_id = bridge_id
        self.residual = residual
        self.tolerance = tolerance
        super(BridgeResidualError, self).__init__(
            f"bridge {bridge_id} is inconsistent: residual {residual:.3e} > {tolerance:.1e}"
        )


class ConfigError(ProxidError, ValueError):
    """
    An experiment configuration is invalid.
    """


class EstimationError(ProxidError):
    """
    An estimator failed on a dataset (degenerate design, propensity, GMM).
    """
