"""
Text and LaTeX rendering of estimand trees.

Both renderers are mappers: each node dispatches to ``map_<kind>`` with a
``names`` mapping from vertex to displayed symbol, so plugs and bound
variables change how the variables below them print. Derived kernels are
labelled ``k1, k2, ...`` in order of first appearance (equal kernels share
a label) and defined, along with every bridge equation, in a trailing
``where`` block.
"""
from __future__ import annotations

from .nodes import BridgeApply, Estimand, KernelLabels, Product, Quotient, Sum

__all__ = [
    "LatexRenderer",
    "TextRenderer",
    "render_latex",
    "render_text",
]

_TILDE = "̃"


class TextRenderer(object):
    sum_symbol = "Σ"
    times = " "

    def __init__(self):
        self._labels = KernelLabels()
        self._bridges = {}
        self._pending = []

    # tokens

    def symbol(self, vertex):
        return vertex.lower()

    def bound_symbol(self, vertex):
        return self.symbol(vertex) + _TILDE

    def plugged_symbol(self, vertex, value):
        if isinstance(value, int):
            return f"{self.symbol(vertex)}={value}"
        return str(value)

    def join(self, symbols):
        return ",".join(symbols)

    def density(self, name, vars, given, do):
        inner = self.join(vars)
        if given:
            inner += "|" + self.join(given)
        if do:
            inner += f"; do({self.join(do)})"
        return f"{name}({inner})"

    def kernel_name(self, label):
        return f"p_{label}"

    def bridge_name(self, bridge_id):
        return bridge_id

    def sum(self, bound, child):
        return f"{self.sum_symbol}_{{{self.join(bound)}}} {child}"

    def quotient(self, numerator, denominator):
        return f"{numerator} / {denominator}"

    def group(self, text):
        return f"({text})"

    def definition(self, head, body):
        return f"  {head} := {body}"

    def equation(self, lhs, rhs):
        return f"  {lhs} = {rhs}"

    def where(self):
        return "where"

    # labels

    def _kernel_label(self, kernel):
        label, new = self._labels.label(kernel)
        if new:
            self._pending.append(("kernel", kernel, label))
        return label

    def _register_bridge(self, solve):
        if solve.bridge_id not in self._bridges:
            self._bridges[solve.bridge_id] = solve
            self._pending.append(("bridge", solve, solve.bridge_id))

    def _names(self, names, vertices):
        return [names.get(v, self.symbol(v)) for v in vertices]

    def _operand(self, node, names):
        text = node.invoke_mapper(self, names)
        if isinstance(node, (Sum, Quotient)) or (
            isinstance(node, Product) and len(node.children) > 1
        ):
            return self.group(text)
        return text

    # node mappers

    def map_density(self, node, names):
        kernel = node.kernel
        if kernel.is_observed:
            given = self._names(names, node.given)
            return self.density("p", self._names(names, node.vars), given, ())
        name = self.kernel_name(self._kernel_label(kernel))
        do = [v for v in kernel.do if v not in node.given]
        return self.density(
            name,
            self._names(names, node.vars),
            self._names(names, node.given),
            self._names(names, do),
        )

    def map_sum(self, node, names):
        inner = dict(names)
        for v in node.over:
            inner[v] = self.bound_symbol(v) if v in names else self.symbol(v)
        child = node.child
        text = child.invoke_mapper(self, inner)
        if isinstance(child, Sum):
            text = self.group(text)
        return self.sum([inner[v] for v in node.over], text)

    def map_product(self, node, names):
        if not node.children:
            return "1"
        return self.times.join(self._operand(c, names) for c in node.children)

    def map_quotient(self, node, names):
        return self.quotient(
            self._operand(node.numerator, names),
            self._operand(node.denominator, names),
        )

    def map_plug(self, node, names):
        inner = dict(names)
        inner[node.var] = self.plugged_symbol(node.var, node.value)
        return node.child.invoke_mapper(self, inner)

    def map_bridge_solve(self, node, names):
        self._register_bridge(node)
        arguments = self.join(self._names(names, node.signature))
        return f"{self.bridge_name(node.bridge_id)}({arguments})"

    def map_bridge_apply(self, node, names):
        self._register_bridge(node.solve)
        return (
            f"{self.bridge_name(node.bridge_id)}"
            f"({self.join(self._names(names, node.arguments))})"
        )

    # entry points

    def _render_pending(self):
        lines = []
        while self._pending:
            kind, item, label = self._pending.pop(0)
            if kind == "kernel":
                head = self.density(
                    self.kernel_name(label),
                    [self.symbol(v) for v in item.scope],
                    (),
                    [self.symbol(v) for v in item.do],
                )
                lines.append(self.definition(head, item.definition.invoke_mapper(self, {})))
            else:
                apply = BridgeApply(item)
                lhs = item.lhs.invoke_mapper(self, {})
                rhs = self.sum(
                    [self.symbol(v) for v in item.proxies],
                    self.times.join(
                        (apply.invoke_mapper(self, {}), item.rhs.invoke_mapper(self, {}))
                    ),
                )
                lines.append(self.equation(lhs, rhs))
        return lines

    def __call__(self, estimand):
        root = estimand.root if isinstance(estimand, Estimand) else estimand
        head = root.invoke_mapper(self, {})
        lines = self._render_pending()
        if not lines:
            return head
        return "\n".join([head, self.where()] + lines)


class LatexRenderer(TextRenderer):
    sum_symbol = r"\sum"
    times = r" \, "

    def bound_symbol(self, vertex):
        return rf"\tilde{{{self.symbol(vertex)}}}"

    def density(self, name, vars, given, do):
        inner = self.join(vars)
        if given:
            inner += r" \mid " + self.join(given)
        if do:
            inner += rf"; \mathrm{{do}}({self.join(do)})"
        return f"{name}({inner})"

    def kernel_name(self, label):
        return f"p_{{{label}}}"

    def bridge_name(self, bridge_id):
        return f"b_{{{bridge_id.lstrip('b')}}}"

    def sum(self, bound, child):
        return rf"\sum_{{{self.join(bound)}}} {child}"

    def quotient(self, numerator, denominator):
        return rf"\frac{{{numerator}}}{{{denominator}}}"

    def group(self, text):
        return rf"\left({text}\right)"

    def definition(self, head, body):
        return rf"{head} &:= {body} \\"

    def equation(self, lhs, rhs):
        return rf"{lhs} &= {rhs} \\"

    def where(self):
        return r"\text{where} \\"

    def _operand(self, node, names):
        if isinstance(node, Quotient):
            return node.invoke_mapper(self, names)
        return super(LatexRenderer, self)._operand(node, names)


def render_text(estimand):
    return TextRenderer()(estimand)


def render_latex(estimand):
    return LatexRenderer()(estimand)
