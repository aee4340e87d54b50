from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np

from .estimands.nodes import (
    BridgeApply,
    BridgeExistence,
    BridgeSolve,
    Completeness,
    CounterfactualIndependence,
    Density,
    Estimand,
    KernelLabels,
    KernelRef,
    KernelTag,
    Plug,
    Product,
    Quotient,
    Sum,
)
from .exceptions import EstimandError, GraphError, QueryError
from .models import CausalQuery, PolicySpec
from .oracle.scm import DiscreteScm

__all__ = [
    "EstimandSerializer",
    "QuerySerializer",
    "ScmSerializer",
    "Serializer",
]

logger = logging.getLogger(__name__)


class Serializer(object):
    """
    JSON (de)serialization with ``to_representation`` producing plain data
    and ``to_internal_value`` validating it back into a value.
    """

    error_class = ValueError

    def to_representation(self, instance):
        raise NotImplementedError

    def to_internal_value(self, data):
        raise NotImplementedError

    def dumps(self, instance):
        return json.dumps(self.to_representation(instance), sort_keys=True, indent=2) + "\n"

    def loads(self, text, source=None):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            where = f"{source}: " if source else ""
            raise self.error_class(f"{where}invalid JSON: {e}")
        return self.to_internal_value(data)

    def load(self, path):
        path = Path(path)
        return self.loads(path.read_text(encoding="utf-8"), source=str(path))

    def dump(self, instance, path):
        Path(path).write_text(self.dumps(instance), encoding="utf-8")


class QuerySerializer(Serializer):
    error_class = QueryError

    def to_representation(self, query):
        data = {
            "outcomes": list(query.outcomes),
            "treatments": dict(sorted(query.treatments.items())),
            "proxies": list(query.proxies),
        }
        if query.policies:
            data["policies"] = [
                {"treatment": p.treatment, "inputs": list(p.inputs), "function": p.function}
                for p in query.policies
            ]
        return data

    def to_internal_value(self, data):
        errors = []
        if not isinstance(data, dict):
            raise QueryError(f"query must be a JSON object, got {type(data).__name__}")
        unknown = set(data) - {"outcomes", "treatments", "proxies", "policies"}
        if unknown:
            errors.append(f"unknown fields {sorted(unknown)}")
        outcomes = data.get("outcomes")
        if not isinstance(outcomes, list) or not all(isinstance(v, str) for v in outcomes):
            errors.append("'outcomes' must be a list of vertex names")
            outcomes = []
        treatments = data.get("treatments", {})
        if isinstance(treatments, list):
            treatments = {v: v.lower() for v in treatments}
        if not isinstance(treatments, dict) or not all(
            isinstance(k, str) and isinstance(v, str) for k, v in treatments.items()
        ):
            errors.append("'treatments' must map vertex names to value labels")
            treatments = {}
        proxies = data.get("proxies", [])
        if not isinstance(proxies, list) or not all(isinstance(v, str) for v in proxies):
            errors.append("'proxies' must be a list of vertex names")
            proxies = []
        policies = []
        for i, item in enumerate(data.get("policies", [])):
            if not isinstance(item, dict) or not isinstance(item.get("treatment"), str):
                errors.append(f"policy #{i} needs a 'treatment'")
                continue
            inputs = item.get("inputs", [])
            if not isinstance(inputs, list):
                errors.append(f"policy #{i} 'inputs' must be a list")
                continue
            policies.append(PolicySpec(item["treatment"], tuple(inputs), item.get("function", "")))
        for name, values in (("outcomes", outcomes), ("proxies", proxies)):
            if len(set(values)) != len(values):
                errors.append(f"duplicate entries in '{name}'")
        if errors:
            raise QueryError("; ".join(errors))
        return CausalQuery(tuple(outcomes), dict(treatments), tuple(proxies), tuple(policies))


class EstimandSerializer(Serializer):
    """
    Node-tagged JSON trees. Derived kernels and bridges are hoisted into
    ``kernels`` (``k0, k1, ...`` in traversal order) and ``bridges`` (by
    bridge id) so shared and structurally equal subtrees are written once.
    """

    error_class = EstimandError

    # encoding

    def to_representation(self, estimand):
        self._labels = KernelLabels(start=0)
        self._kernels, self._bridges = {}, {}
        root = estimand.root if isinstance(estimand, Estimand) else estimand
        ledger = estimand.ledger if isinstance(estimand, Estimand) else ()
        encoded = self.encode(root)
        return {
            "root": encoded,
            "kernels": self._kernels,
            "bridges": self._bridges,
            "ledger": [self.encode_record(r) for r in ledger],
        }

    def kernel_id(self, kernel):
        kid, new = self._labels.label(kernel)
        if not new:
            return kid
        entry = {"tag": kernel.tag.value, "scope": list(kernel.scope), "do": list(kernel.do)}
        self._kernels[kid] = entry
        entry["definition"] = None if kernel.definition is None else self.encode(kernel.definition)
        return kid

    def bridge_id(self, solve):
        existing = self._bridges.get(solve.bridge_id)
        if existing is None:
            entry = {"signature": list(solve.signature), "instruments": list(solve.instruments)}
            self._bridges[solve.bridge_id] = entry
            entry["lhs"] = self.encode(solve.lhs)
            entry["rhs"] = self.encode(solve.rhs)
        return solve.bridge_id

    def encode(self, node):
        if isinstance(node, Density):
            return {
                "kind": "density",
                "vars": list(node.vars),
                "given": list(node.given),
                "kernel": self.kernel_id(node.kernel),
            }
        if isinstance(node, Sum):
            return {"kind": "sum", "over": list(node.over), "child": self.encode(node.child)}
        if isinstance(node, Product):
            return {"kind": "product", "children": [self.encode(c) for c in node.children]}
        if isinstance(node, Quotient):
            return {
                "kind": "quotient",
                "numerator": self.encode(node.numerator),
                "denominator": self.encode(node.denominator),
            }
        if isinstance(node, Plug):
            return {
                "kind": "plug",
                "var": node.var,
                "value": node.value,
                "child": self.encode(node.child),
            }
        if isinstance(node, BridgeSolve):
            return {"kind": "bridge_solve", "bridge": self.bridge_id(node)}
        if isinstance(node, BridgeApply):
            return {
                "kind": "bridge_apply",
                "bridge": self.bridge_id(node.solve),
                "bindings": dict(node.bindings),
            }
        raise EstimandError(f"cannot serialize {type(node).__name__}")

    def encode_record(self, record):
        if isinstance(record, Completeness):
            return {
                "kind": "completeness",
                "bridge": record.bridge_id,
                "conditioning": list(record.conditioning),
                "hidden": list(record.hidden),
            }
        if isinstance(record, BridgeExistence):
            return {
                "kind": "bridge_existence",
                "bridge": record.bridge_id,
                "equation": record.equation,
            }
        if isinstance(record, CounterfactualIndependence):
            return {
                "kind": "counterfactual_independence",
                "statement": record.statement,
                "checked_graphically": record.checked_graphically,
            }
        raise EstimandError(f"unknown ledger record {type(record).__name__}")

    # decoding

    def to_internal_value(self, data):
        if not isinstance(data, dict) or "root" not in data:
            raise EstimandError("estimand JSON needs a 'root'")
        self._raw_kernels = data.get("kernels", {})
        self._raw_bridges = data.get("bridges", {})
        self._decoded_kernels, self._decoded_bridges = {}, {}
        root = self.decode(data["root"])
        ledger = tuple(self.decode_record(r) for r in data.get("ledger", []))
        return Estimand(root, ledger)

    def decode_kernel(self, kid):
        if kid in self._decoded_kernels:
            return self._decoded_kernels[kid]
        raw = self._raw_kernels.get(kid)
        if raw is None:
            raise EstimandError(f"unknown kernel {kid!r}")
        definition = raw.get("definition")
        kernel = KernelRef(
            KernelTag(raw["tag"]),
            tuple(raw["scope"]),
            tuple(raw.get("do", ())),
            None if definition is None else self.decode(definition),
        )
        self._decoded_kernels[kid] = kernel
        return kernel

    def decode_bridge(self, bid):
        if bid in self._decoded_bridges:
            return self._decoded_bridges[bid]
        raw = self._raw_bridges.get(bid)
        if raw is None:
            raise EstimandError(f"unknown bridge {bid!r}")
        rhs = self.decode(raw["rhs"])
        if not isinstance(rhs, Density):
            raise EstimandError(f"bridge {bid!r} needs a density on its right-hand side")
        solve = BridgeSolve(
            bid, tuple(raw["signature"]), self.decode(raw["lhs"]), rhs, tuple(raw["instruments"])
        )
        self._decoded_bridges[bid] = solve
        return solve

    def decode(self, data):
        kind = data.get("kind") if isinstance(data, dict) else None
        try:
            if kind == "density":
                return Density(
                    tuple(data["vars"]),
                    tuple(data.get("given", ())),
                    self.decode_kernel(data["kernel"]),
                )
            if kind == "sum":
                return Sum(tuple(data["over"]), self.decode(data["child"]))
            if kind == "product":
                return Product(tuple(self.decode(c) for c in data["children"]))
            if kind == "quotient":
                return Quotient(self.decode(data["numerator"]), self.decode(data["denominator"]))
            if kind == "plug":
                return Plug(data["var"], data["value"], self.decode(data["child"]))
            if kind == "bridge_solve":
                return self.decode_bridge(data["bridge"])
            if kind == "bridge_apply":
                return BridgeApply(
                    self.decode_bridge(data["bridge"]), tuple(data.get("bindings", {}).items())
                )
        except KeyError as e:
            raise EstimandError(f"{kind} node is missing field {e}")
        raise EstimandError(f"unknown node kind {kind!r}")

    def decode_record(self, data):
        kind = data.get("kind")
        if kind == "completeness":
            return Completeness(data["bridge"], tuple(data["conditioning"]), tuple(data["hidden"]))
        if kind == "bridge_existence":
            return BridgeExistence(data["bridge"], data["equation"])
        if kind == "counterfactual_independence":
            return CounterfactualIndependence(
                data["statement"], data.get("checked_graphically", True)
            )
        raise EstimandError(f"unknown ledger record {kind!r}")


class ScmSerializer(Serializer):
    """
    SCMs as vertex kinds, parents, cardinalities and row-major flattened CPTs
    whose parent axes follow sorted vertex names.
    """

    error_class = GraphError

    def to_representation(self, scm):
        return {
            "vertices": {v: k.value for v, k in scm.kinds.items()},
            "parents": {v: list(ps) for v, ps in scm.parents.items()},
            "cardinalities": scm.cards,
            "cpts": {v: [float(x) for x in np.ravel(cpt)] for v, cpt in scm.cpts.items()},
        }

    def to_internal_value(self, data):
        errors = []
        for key in ("vertices", "parents", "cardinalities", "cpts"):
            if not isinstance(data.get(key), dict):
                errors.append(f"'{key}' must be an object")
        if errors:
            raise GraphError("; ".join(errors))
        cards = data["cardinalities"]
        cpts = {}
        for v, flat in data["cpts"].items():
            parents = sorted(data["parents"].get(v, []))
            try:
                shape = tuple(cards[p] for p in parents) + (cards[v],)
                cpts[v] = np.asarray(flat, dtype=float).reshape(shape)
            except (KeyError, ValueError) as e:
                errors.append(f"CPT of {v!r} does not fit its cardinalities: {e}")
        if errors:
            raise GraphError("; ".join(errors))
        return DiscreteScm(data["vertices"], data["parents"], cards, cpts)
