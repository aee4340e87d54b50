from __future__ import annotations

from unittest import TestCase, skipUnless

import numpy as np

from proxid.estimands import Evaluator, render_text
from proxid.estimands.nodes import Density, Estimand, KernelRef, Plug, Sum, iter_nodes
from proxid.exceptions import NotFixableError, QueryError
from proxid.identification import (
    ancestral_set,
    derive_district,
    identify,
    proximal_identify,
    reduce_policy_query,
)
from proxid.models import CausalQuery, PolicySpec
from proxid.oracle import random_scm
from proxid.oracle.verify import verify_trials
from proxid.serializers import EstimandSerializer

from .factories import load_asset_graph, load_asset_query, random_admg, slow_tests_enabled

AY = CausalQuery(("Y",), {"A": "a"})


class TestAncestralSet(TestCase):
    def test_avoids_treatments(self):
        """
        Test that Y* stops at the treatments.
        """
        graph = load_asset_graph("backdoor")

        self.assertEqual(ancestral_set(graph, {"Y"}, {"A"}), {"C", "Y"})
        self.assertEqual(ancestral_set(graph, {"Y"}), {"A", "C", "Y"})

    def test_overlap(self):
        """
        Test that a vertex cannot be outcome and treatment.
        """
        with self.assertRaises(QueryError):
            ancestral_set(load_asset_graph("backdoor"), {"Y"}, {"Y"})


class TestDeriveDistrict(TestCase):
    def test_sequence_must_cover_the_rest(self):
        """
        Test that the fixing sequence must remove exactly the other vertices.
        """
        graph = load_asset_graph("frontdoor_projected")

        with self.assertRaises(NotFixableError):
            derive_district(graph, {"A", "Y"}, ("C",))

    def test_sequence_must_be_valid(self):
        """
        Test that an unfixable vertex in the sequence is refused.
        """
        graph = load_asset_graph("frontdoor_projected")

        with self.assertRaises(NotFixableError):
            derive_district(graph, {"M"}, ("A", "C", "Y"))

    def test_kernel_covers_the_district(self):
        """
        Test that the derived density ranges over the district under do of the rest.
        """
        density = derive_district(load_asset_graph("frontdoor_projected"), {"A", "Y"}, ("C", "M"))

        self.assertEqual(density.vars, ("A", "Y"))
        self.assertEqual(set(density.kernel.do), {"C", "M"})


class TestIdentify(TestCase):
    def assertVerified(self, graph, query, result, trials=5):
        self.assertTrue(result.identified, getattr(result, "describe", lambda: "")())
        report = verify_trials(graph, query, result.estimand, trials=trials, seed=7)
        self.assertTrue(report.ok, report.summary())
        self.assertEqual(len(report.evaluated), trials)

    def test_backdoor(self):
        """
        Test that conditional ignorability identifies p(Y(a)) and matches the SCM.
        """
        graph = load_asset_graph("backdoor")
        result = identify(graph, AY)

        self.assertEqual(result.trace[0], "Y* = {C, Y}")
        self.assertVerified(graph, AY, result)

    def test_frontdoor(self):
        """
        Test that the front-door graph with a hidden confounder is identified.
        """
        graph = load_asset_graph("frontdoor")

        self.assertVerified(graph, AY, identify(graph, AY))

    def test_bow_is_not_identified(self):
        """
        Test that the bow graph has no valid fixing sequence.
        """
        result = identify(load_asset_graph("bow"), AY)

        self.assertFalse(result.identified)
        self.assertEqual(result.district, {"Y"})
        self.assertIn("not identified", result.describe())

    def test_frontdoor_with_direct_effect_is_not_identified(self):
        """
        Test that adding A -> Y to the front-door graph breaks identification.
        """
        self.assertFalse(identify(load_asset_graph("frontdoor_direct"), AY).identified)

    def test_witness(self):
        """
        Test that the failing district and its stuck vertices are reported.
        """
        result = identify(load_asset_graph("verma"), AY)

        self.assertFalse(result.identified)
        self.assertEqual(result.district, {"Y"})
        self.assertEqual(result.stuck, {"A", "C", "M"})
        self.assertIn("stuck at {A, C, M}", result.trace[-1])

    def test_refuses_proxies_and_policies(self):
        """
        Test that proxies and policies are rejected by the classical engine.
        """
        graph = load_asset_graph("proximal_g")

        with self.assertRaises(QueryError):
            identify(graph, CausalQuery(("Y",), {"A": "a"}, proxies=("W",)))
        policy = CausalQuery(("Y",), {"A": "a"}, policies=(PolicySpec("A", ("C",)),))
        with self.assertRaises(QueryError):
            identify(graph, policy)

    def test_unknown_vertex(self):
        """
        Test that queries naming unknown or hidden vertices are rejected.
        """
        graph = load_asset_graph("frontdoor")

        with self.assertRaises(QueryError):
            identify(graph, CausalQuery(("Y",), {"B": "b"}))
        with self.assertRaises(QueryError):
            identify(graph, CausalQuery(("Y",), {"U": "u"}))

    def test_proximal_engine_without_proxies_agrees(self):
        """
        Test that the proximal engine reduces to the classical one without proxies.
        """
        for name in ("backdoor", "frontdoor_projected"):
            graph = load_asset_graph(name)
            classic = identify(graph, AY)
            proximal = proximal_identify(graph, AY)
            self.assertTrue(proximal.identified, name)
            self.assertEqual(classic.estimand, proximal.estimand, name)

        self.assertFalse(proximal_identify(load_asset_graph("verma"), AY).identified)


class TestPolicy(TestCase):
    def setUp(self):
        super(TestPolicy, self).setUp()
        self.graph = load_asset_graph("two_stage")
        self.query = load_asset_query("two_stage")
        self.functions = {"A0": lambda c0: 1 - c0, "A1": lambda c0, c1: c0 ^ c1}

    def test_reduction(self):
        """
        Test that a policy query becomes the joint query over its inputs.
        """
        joint, recipe = reduce_policy_query(self.graph, self.query)

        self.assertEqual(joint.outcomes, ("C0", "C1", "Y"))
        self.assertEqual(joint.policies, ())
        self.assertEqual(recipe.inputs, ("C0", "C1"))

    def test_queries_without_policies_pass_through(self):
        """
        Test that a plain query is returned unchanged with no recipe.
        """
        joint, recipe = reduce_policy_query(self.graph, CausalQuery(("Y",), {"A0": "a0"}))

        self.assertEqual(joint.outcomes, ("Y",))
        self.assertIsNone(recipe)

    def test_every_treatment_needs_a_policy(self):
        """
        Test that a treatment without a policy is refused.
        """
        query = CausalQuery(
            ("Y",), {"A0": "a0", "A1": "a1"}, policies=(PolicySpec("A0", ("C0",)),)
        )

        with self.assertRaises(QueryError):
            reduce_policy_query(self.graph, query)

    def test_policy_input_must_precede_treatment(self):
        """
        Test that policies cannot read descendants of their treatment.
        """
        query = CausalQuery(("Y",), {"A0": "a0"}, policies=(PolicySpec("A0", ("C1",)),))

        with self.assertRaises(QueryError):
            reduce_policy_query(self.graph, query)

    def test_recipe_matches_policy_intervention(self):
        """
        Test that the recipe applied to the joint estimand gives p(Y(f)).
        """
        joint, recipe = reduce_policy_query(self.graph, self.query)
        result = identify(self.graph, joint)
        self.assertTrue(result.identified)
        self.assertIn("f0(c0)", render_text(recipe.wrap(result.estimand.root)))

        for seed in range(3):
            scm = random_scm(self.graph, seed=seed, floor=0.05)
            table = Evaluator(scm.observed())(result.estimand)
            estimate = recipe.apply(table, self.functions, scm.cards)
            truth = scm.policy_interventional(
                {"A0": (("C0",), self.functions["A0"]), "A1": (("C0", "C1"), self.functions["A1"])},
                keep=("Y",),
            )
            np.testing.assert_allclose(estimate.aligned(("Y",)), truth.values, atol=1e-10)

    def test_wrap_replaces_treatment_labels(self):
        """
        Test that every treatment plug in the wrapped estimand carries its policy.
        """
        joint, recipe = reduce_policy_query(self.graph, self.query)
        wrapped = recipe.wrap(identify(self.graph, joint).estimand.root)

        plugs = {
            (n.var, n.value)
            for n in iter_nodes(wrapped)
            if isinstance(n, Plug) and n.var in ("A0", "A1")
        }
        self.assertEqual(plugs, {("A0", "f0(c0)"), ("A1", "f1(c0,c1)")})
        head = render_text(wrapped).splitlines()[0]
        self.assertIn("f1(c0,c1)", head)
        self.assertNotIn("a0", head)
        self.assertNotIn("a1", head)
        self.assertIn("f0(c0)", EstimandSerializer().dumps(Estimand(wrapped)))

    def test_wrap_plugs_unmentioned_treatments(self):
        """
        Test that a treatment absent from the estimand is plugged on top.
        """
        _, recipe = reduce_policy_query(self.graph, self.query)
        root = Density(("Y",), (), KernelRef.observed(("Y",)))

        wrapped = recipe.wrap(root)

        self.assertIsInstance(wrapped, Sum)
        self.assertEqual(wrapped.over, ("C0", "C1"))
        self.assertEqual(wrapped.child.var, "A0")
        self.assertEqual(wrapped.child.child.var, "A1")


class TestRandomSoundness(TestCase):
    def run_graphs(self, seeds, size, trials):
        identified = 0
        for seed in seeds:
            graph = random_admg(seed, size=size)
            query = CausalQuery((f"V{size - 1}",), {"V0": "v0"})
            result = identify(graph, query)
            if not result.identified:
                continue
            identified += 1
            report = verify_trials(graph, query, result.estimand, trials=trials, seed=seed)
            self.assertTrue(report.ok, f"seed {seed}: {report.summary()}")
        return identified

    def test_small_graphs(self):
        """
        Test that identified estimands on random small graphs match the SCM.
        """
        self.assertGreater(self.run_graphs(range(12), size=4, trials=2), 0)

    @skipUnless(slow_tests_enabled(), "slow tests disabled")
    def test_many_graphs(self):
        """
        Test soundness over a larger batch of random graphs.
        """
        self.assertGreater(self.run_graphs(range(200), size=5, trials=10), 0)
