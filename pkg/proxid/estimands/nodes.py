"""
Estimand expression trees.

Nodes are frozen dataclasses dispatched through ``invoke_mapper`` in the
style of expression-tree mappers: a mapper implements ``map_density``,
``map_sum`` and so on, and each node calls the method named by its
``mapper_method``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import ClassVar

from ..exceptions import EstimandError

__all__ = [
    "BridgeApply",
    "BridgeExistence",
    "BridgeSolve",
    "Completeness",
    "CounterfactualIndependence",
    "Density",
    "Estimand",
    "KernelLabels",
    "KernelRef",
    "KernelTag",
    "Node",
    "Plug",
    "Product",
    "Quotient",
    "Sum",
    "free_variables",
    "iter_nodes",
]


def _names(values):
    if isinstance(values, str):
        values = (values,)
    return tuple(sorted(set(values)))


class KernelTag(enum.Enum):
    OBSERVED = "observed"
    INTERVENTIONAL = "interventional"
    INDUCTIVE = "inductive"
    REUSING = "reusing"


class Node(object):
    mapper_method: ClassVar[str] = ""

    def invoke_mapper(self, mapper, *args, **kwargs):
        return getattr(mapper, self.mapper_method)(self, *args, **kwargs)


@dataclass(frozen=True)
class KernelRef:
    """
    A kernel p(scope | do(do)): the observed joint or a derived margin whose
    ``definition`` is the estimand that produced it. The tag records which
    margin produced a derived kernel and takes no part in equality.
    """

    tag: KernelTag = field(compare=False)
    scope: tuple
    do: tuple = ()
    definition: Node | None = field(default=None, compare=True, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "tag", KernelTag(self.tag))
        object.__setattr__(self, "scope", _names(self.scope))
        object.__setattr__(self, "do", _names(self.do))
        if set(self.scope) & set(self.do):
            overlap = sorted(set(self.scope) & set(self.do))
            raise EstimandError(f"kernel scope and do-set overlap: {overlap}")
        if (self.tag is KernelTag.OBSERVED) != (self.definition is None):
            raise EstimandError(
                f"{self.tag.value} kernel over {self.scope} has a mismatched definition"
            )

    @property
    def is_observed(self):
        return self.tag is KernelTag.OBSERVED

    @classmethod
    def observed(cls, scope):
        return cls(KernelTag.OBSERVED, scope)


class KernelLabels(object):
    """
    Labels derived kernels ``k1, k2, ...`` in order of first appearance.

    Equal kernels share a label, whatever margin produced them.
    """

    def __init__(self, prefix="k", start=1):
        self.prefix = prefix
        self.next = start
        self._by_id = {}
        self._by_shape = {}
        self._seen = []

    def label(self, kernel):
        """
        Return ``(label, new)`` where ``new`` marks the first kernel of its kind.
        """
        label = self._by_id.get(id(kernel))
        if label is not None:
            return label, False
        self._seen.append(kernel)
        shape = (kernel.scope, kernel.do)
        for other, other_label in self._by_shape.get(shape, ()):
            if other.definition == kernel.definition:
                self._by_id[id(kernel)] = other_label
                return other_label, False
        label = f"{self.prefix}{self.next}"
        self.next += 1
        self._by_id[id(kernel)] = label
        self._by_shape.setdefault(shape, []).append((kernel, label))
        return label, True


@dataclass(frozen=True)
class Density(Node):
    vars: tuple
    given: tuple
    kernel: KernelRef

    mapper_method: ClassVar[str] = "map_density"

    def __post_init__(self):
        object.__setattr__(self, "vars", _names(self.vars))
        object.__setattr__(self, "given", _names(self.given))
        if not self.vars:
            raise EstimandError("a density needs at least one variable")
        if set(self.vars) & set(self.given):
            raise EstimandError(f"density variables {self.vars} overlap conditioning {self.given}")
        outside = set(self.vars) - set(self.kernel.scope)
        if outside:
            raise EstimandError(f"density variables {sorted(outside)} outside kernel scope")
        outside = set(self.given) - set(self.kernel.scope) - set(self.kernel.do)
        if outside:
            raise EstimandError(f"conditioning variables {sorted(outside)} unknown to the kernel")


@dataclass(frozen=True)
class Sum(Node):
    over: tuple
    child: Node

    mapper_method: ClassVar[str] = "map_sum"

    def __post_init__(self):
        object.__setattr__(self, "over", _names(self.over))


@dataclass(frozen=True)
class Product(Node):
    children: tuple

    mapper_method: ClassVar[str] = "map_product"

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))


@dataclass(frozen=True)
class Quotient(Node):
    numerator: Node
    denominator: Node

    mapper_method: ClassVar[str] = "map_quotient"


@dataclass(frozen=True)
class Plug(Node):
    """
    Bind ``var`` to ``value``: a string is a symbolic treatment label and
    leaves the axis in place, an integer selects that category.
    """

    var: str
    value: str | int
    child: Node

    mapper_method: ClassVar[str] = "map_plug"


@dataclass(frozen=True)
class BridgeSolve(Node):
    """
    The defining equation ``lhs = Σ_{proxies} b(signature) · rhs`` of a
    bridge function; evaluates to the solution ``b``.
    """

    bridge_id: str
    signature: tuple
    lhs: Node
    rhs: Density
    instruments: tuple

    mapper_method: ClassVar[str] = "map_bridge_solve"

    def __post_init__(self):
        object.__setattr__(self, "signature", tuple(self.signature))
        object.__setattr__(self, "instruments", _names(self.instruments))
        missing = set(self.proxies) - set(self.signature)
        if missing:
            raise EstimandError(
                f"bridge {self.bridge_id} signature lacks proxies {sorted(missing)}"
            )
        if not self.proxies:
            raise EstimandError(f"bridge {self.bridge_id} has no unknowns")

    @property
    def proxies(self):
        return self.rhs.vars


@dataclass(frozen=True)
class BridgeApply(Node):
    solve: BridgeSolve
    bindings: tuple = ()

    mapper_method: ClassVar[str] = "map_bridge_apply"

    def __post_init__(self):
        object.__setattr__(self, "bindings", tuple(sorted(dict(self.bindings).items())))

    @property
    def bridge_id(self):
        return self.solve.bridge_id

    @property
    def arguments(self):
        bound = dict(self.bindings)
        return tuple(bound.get(v, v) for v in self.solve.signature)


@dataclass(frozen=True)
class Completeness:
    bridge_id: str
    conditioning: tuple
    hidden: tuple

    def __post_init__(self):
        object.__setattr__(self, "conditioning", _names(self.conditioning))
        object.__setattr__(self, "hidden", _names(self.hidden))

    def describe(self):
        return (
            f"completeness[{self.bridge_id}]: E[v({','.join(self.hidden)}) | "
            f"{','.join(self.conditioning)}] = 0 implies v = 0"
        )


@dataclass(frozen=True)
class BridgeExistence:
    bridge_id: str
    equation: str

    def describe(self):
        return f"bridge[{self.bridge_id}]: {self.equation}"


@dataclass(frozen=True)
class CounterfactualIndependence:
    statement: str
    checked_graphically: bool = True

    def describe(self):
        how = "checked graphically" if self.checked_graphically else "assumed"
        return f"{self.statement} ({how})"


@dataclass(frozen=True)
class Estimand:
    root: Node
    ledger: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "ledger", tuple(self.ledger))

    @property
    def free_variables(self):
        return free_variables(self.root)

    @property
    def bridges(self):
        return tuple(n for n in iter_nodes(self.root) if isinstance(n, BridgeSolve))

    @property
    def kernels(self):
        seen, found = set(), []
        for node in iter_nodes(self.root):
            if isinstance(node, Density) and not node.kernel.is_observed:
                if id(node.kernel) not in seen:
                    seen.add(id(node.kernel))
                    found.append(node.kernel)
        return tuple(found)


def _children(node):
    if isinstance(node, Density):
        return (node.kernel.definition,) if node.kernel.definition is not None else ()
    if isinstance(node, (Sum, Plug)):
        return (node.child,)
    if isinstance(node, Product):
        return node.children
    if isinstance(node, Quotient):
        return (node.numerator, node.denominator)
    if isinstance(node, BridgeSolve):
        return (node.lhs, node.rhs)
    if isinstance(node, BridgeApply):
        return (node.solve,)
    raise EstimandError(f"unknown node {type(node).__name__}")


def iter_nodes(root):
    """
    Pre-order traversal through kernel definitions and bridge equations,
    visiting each shared subtree once.
    """
    stack, seen = [root], set()
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        yield node
        stack.extend(reversed(_children(node)))


def free_variables(node):
    if isinstance(node, Density):
        return frozenset(node.vars) | frozenset(node.given) | frozenset(node.kernel.do)
    if isinstance(node, Sum):
        return free_variables(node.child) - frozenset(node.over)
    if isinstance(node, Product):
        return frozenset().union(*(free_variables(c) for c in node.children))
    if isinstance(node, Quotient):
        return free_variables(node.numerator) | free_variables(node.denominator)
    if isinstance(node, Plug):
        child = free_variables(node.child)
        return child - {node.var} if isinstance(node.value, int) else child
    if isinstance(node, BridgeSolve):
        return frozenset(node.signature)
    if isinstance(node, BridgeApply):
        return frozenset(node.arguments)
    raise EstimandError(f"unknown node {type(node).__name__}")
