"""
Kernel emission shared by the classical and the proximal engines.

A kernel is always paired with the CADMG it factorizes over: its scope is
the graph's random vertices and its do-set the graph's fixed vertices.
"""
from __future__ import annotations

import logging

from ..estimands.nodes import Density, KernelRef, KernelTag, Plug, Product, Quotient, Sum

__all__ = [
    "assemble",
    "emit_fix",
    "emit_marginal",
    "plug_district",
]

logger = logging.getLogger(__name__)


def emit_fix(kernel, graph, vertex, tag=KernelTag.INTERVENTIONAL):
    """
    Fix ``vertex`` in ``kernel``: a vertex without children is summed out,
    otherwise the kernel is divided by ``Density(vertex | mb*)``.
    """
    joint = Density(kernel.scope, (), kernel)
    if graph.children(vertex) & graph.random:
        blanket = graph.mb_star(vertex)
        definition = Quotient(joint, Density((vertex,), tuple(blanket), kernel))
    else:
        definition = Sum((vertex,), joint)
    scope = tuple(v for v in kernel.scope if v != vertex)
    logger.debug("fixed %s over %s", vertex, ",".join(kernel.scope))
    return KernelRef(tag, scope, kernel.do + (vertex,), definition)


def emit_marginal(kernel, drop, do=(), tag=None):
    """
    The margin of ``kernel`` without ``drop``, with ``do`` added to its
    do-set (the dropped vertices' ancestors do not depend on them).
    """
    drop, do = set(drop), set(do)
    scope = tuple(v for v in kernel.scope if v not in drop)
    if not scope:
        return None
    tag = kernel.tag if tag is None else tag
    if tag is KernelTag.OBSERVED:
        tag = KernelTag.INTERVENTIONAL
    new_do = tuple(sorted(set(kernel.do) | do - set(scope)))
    return KernelRef(tag, scope, new_do, Density(scope, (), kernel))


def plug_district(kernel, district, labels, keep):
    """
    The district term ``p(D | do(s_D))`` with treatment labels plugged into
    treatment axes and the reference category into fixed vertices that lie
    outside ``keep``.
    """
    node = Density(tuple(district), (), kernel)
    for v in kernel.do:
        if v in labels:
            node = Plug(v, labels[v], node)
        elif v not in keep:
            node = Plug(v, 0, node)
    return node


def assemble(terms, bound):
    body = terms[0] if len(terms) == 1 else Product(tuple(terms))
    return Sum(tuple(bound), body) if bound else body
