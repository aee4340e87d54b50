from __future__ import annotations

import json
import os
import tempfile
from unittest import TestCase

import numpy as np

from proxid.estimands import Evaluator, render_text
from proxid.estimands.nodes import Density, Estimand, KernelRef, KernelTag, Product
from proxid.exceptions import EstimandError, GraphError, QueryError
from proxid.identification import proximal_identify
from proxid.oracle import random_scm
from proxid.serializers import EstimandSerializer, QuerySerializer, ScmSerializer

from .factories import asset_path, load_asset_graph, load_asset_query


class TestQuerySerializer(TestCase):
    def setUp(self):
        super(TestQuerySerializer, self).setUp()
        self.serializer = QuerySerializer()

    def test_load_asset(self):
        """
        Test that a bundled query file loads with its proxies.
        """
        query = self.serializer.load(asset_path("verma_proxies.query.json"))

        self.assertEqual(query.outcomes, ("Y",))
        self.assertEqual(query.treatments, {"A": "a"})
        self.assertEqual(set(query.proxies), {"D", "W", "X", "Z"})

    def test_treatment_list_shorthand(self):
        """
        Test that treatments given as a list take lower-case labels.
        """
        query = self.serializer.loads('{"outcomes": ["Y"], "treatments": ["A0"]}')

        self.assertEqual(query.treatments, {"A0": "a0"})

    def test_policies(self):
        """
        Test that policy entries survive a dump and load.
        """
        query = load_asset_query("two_stage")

        again = self.serializer.loads(self.serializer.dumps(query))

        self.assertEqual(again.policies, query.policies)
        self.assertEqual(again, query)

    def test_errors_are_collected(self):
        """
        Test that every field problem is reported at once.
        """
        text = json.dumps({"outcomes": "Y", "proxies": ["W", "W"], "color": 1})

        with self.assertRaises(QueryError) as caught:
            self.serializer.loads(text)
        message = str(caught.exception)
        self.assertIn("'outcomes'", message)
        self.assertIn("unknown fields ['color']", message)

    def test_invalid_json_names_source(self):
        """
        Test that malformed JSON mentions where it came from.
        """
        with self.assertRaises(QueryError) as caught:
            self.serializer.loads("{", source="broken.json")
        self.assertIn("broken.json", str(caught.exception))


class TestEstimandSerializer(TestCase):
    def test_proximal_estimand_survives_a_file(self):
        """
        Test that a written estimand reads back with the same value and text.
        """
        graph, query = load_asset_graph("proximal_g"), load_asset_query("proximal_g")
        estimand = proximal_identify(graph, query).estimand
        serializer = EstimandSerializer()
        data = serializer.to_representation(estimand)

        self.assertEqual(sorted(data["bridges"]), ["b1"])
        self.assertTrue(all(k.startswith("k") for k in data["kernels"]))

        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "estimand.json")
            serializer.dump(estimand, path)
            again = serializer.load(path)

        self.assertEqual(render_text(again), render_text(estimand))
        self.assertEqual(len(again.ledger), len(estimand.ledger))
        env = random_scm(graph, seed=3, floor=0.05).observed()
        first = Evaluator(env, residual_tolerance=1e-6)(estimand)
        second = Evaluator(env, residual_tolerance=1e-6)(again)
        self.assertLess(first.max_abs_diff(second), 1e-12)

    def test_equal_kernels_are_written_once(self):
        """
        Test that structurally equal kernels share one entry.
        """
        definition = Density(("Y",), ("A",), KernelRef.observed(("A", "Y")))
        first = KernelRef(KernelTag.INTERVENTIONAL, ("Y",), ("A",), definition)
        second = KernelRef(KernelTag.REUSING, ("Y",), ("A",), definition)
        root = Product((Density(("Y",), (), first), Density(("Y",), (), second)))

        data = EstimandSerializer().to_representation(Estimand(root))

        self.assertEqual(sorted(data["kernels"]), ["k0", "k1"])
        kernels = {c["kernel"] for c in data["root"]["children"]}
        self.assertEqual(len(kernels), 1)

    def test_unknown_references(self):
        """
        Test that dangling kernel and bridge ids are refused.
        """
        serializer = EstimandSerializer()
        density = {"kind": "density", "vars": ["Y"], "given": [], "kernel": "k9"}

        with self.assertRaises(EstimandError):
            serializer.to_internal_value({"root": density})
        with self.assertRaises(EstimandError):
            serializer.to_internal_value({"root": {"kind": "bridge_solve", "bridge": "b4"}})
        with self.assertRaises(EstimandError):
            serializer.to_internal_value({"root": {"kind": "integral"}})
        with self.assertRaises(EstimandError):
            serializer.to_internal_value({"kernels": {}})


class TestScmSerializer(TestCase):
    def test_preserves_observed_law(self):
        """
        Test that a dumped SCM reloads with identical tables.
        """
        scm = random_scm(load_asset_graph("frontdoor"), seed=5)
        serializer = ScmSerializer()

        again = serializer.loads(serializer.dumps(scm))

        self.assertEqual(again.cards, scm.cards)
        np.testing.assert_allclose(again.observed().values, scm.observed().values)

    def test_bad_shapes(self):
        """
        Test that CPTs that do not fit the cardinalities are refused.
        """
        data = {
            "vertices": {"A": "observed"},
            "parents": {},
            "cardinalities": {"A": 2},
            "cpts": {"A": [0.2, 0.3, 0.5]},
        }

        with self.assertRaises(GraphError):
            ScmSerializer().to_internal_value(data)
        with self.assertRaises(GraphError):
            ScmSerializer().to_internal_value({"vertices": []})
