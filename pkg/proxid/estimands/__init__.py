from __future__ import annotations

from .evaluate import Evaluator, evaluate  # noqa
from .nodes import (  # noqa
    BridgeApply,
    BridgeExistence,
    BridgeSolve,
    Completeness,
    CounterfactualIndependence,
    Density,
    Estimand,
    KernelRef,
    KernelTag,
    Plug,
    Product,
    Quotient,
    Sum,
    free_variables,
    iter_nodes,
)
from .render import LatexRenderer, TextRenderer, render_latex, render_text  # noqa
from .simplify import Simplifier, simplify  # noqa
