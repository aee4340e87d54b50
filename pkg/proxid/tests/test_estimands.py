from __future__ import annotations

from unittest import TestCase

import numpy as np

from proxid.estimands import (
    BridgeSolve,
    Density,
    Estimand,
    Evaluator,
    KernelRef,
    KernelTag,
    Plug,
    Product,
    Quotient,
    Sum,
    free_variables,
    render_latex,
    render_text,
    simplify,
)
from proxid.exceptions import BridgeResidualError, EstimandError, PositivityError
from proxid.oracle import DiscreteDistribution

AY = KernelRef.observed(("A", "Y"))
WZ = KernelRef.observed(("W", "Z"))


def p(vars, given=(), kernel=AY):
    return Density(tuple(vars), tuple(given), kernel)


def derived(definition, scope=("Y",), do=("A",)):
    return KernelRef(KernelTag.INTERVENTIONAL, scope, do, definition)


class TestNodes(TestCase):
    def test_kernel_scope_and_do_overlap(self):
        """
        Test that a kernel cannot both intervene on and range over a vertex.
        """
        with self.assertRaises(EstimandError):
            KernelRef(KernelTag.INTERVENTIONAL, ("A", "Y"), ("A",), p("Y", "A"))

    def test_observed_kernel_has_no_definition(self):
        """
        Test that only derived kernels carry definitions.
        """
        with self.assertRaises(EstimandError):
            KernelRef(KernelTag.OBSERVED, ("Y",), (), p("Y"))
        with self.assertRaises(EstimandError):
            KernelRef(KernelTag.INTERVENTIONAL, ("Y",), ("A",))

    def test_density_outside_kernel(self):
        """
        Test that densities only mention their kernel's variables.
        """
        with self.assertRaises(EstimandError):
            p("M")
        with self.assertRaises(EstimandError):
            p("Y", "Y")

    def test_free_variables(self):
        """
        Test that integer plugs and sums bind their variable.
        """
        self.assertEqual(free_variables(Plug("A", 0, p("Y", "A"))), {"Y"})
        self.assertEqual(free_variables(Plug("A", "a", p("Y", "A"))), {"A", "Y"})
        self.assertEqual(free_variables(Sum(("A",), p(("A", "Y")))), {"Y"})

    def test_estimand_collects_kernels_and_bridges(self):
        """
        Test that derived kernels are listed once.
        """
        kernel = derived(p("Y", "A"))
        estimand = Estimand(Product((p("Y", (), kernel), p("Y", (), kernel))))

        self.assertEqual(estimand.kernels, (kernel,))
        self.assertEqual(estimand.bridges, ())

    def test_bridge_signature_covers_proxies(self):
        """
        Test that a bridge signature must list its proxies.
        """
        with self.assertRaises(EstimandError):
            BridgeSolve("b1", ("Z",), Product(()), p("W", "Z", WZ), ("Z",))


class TestRender(TestCase):
    def test_conditional(self):
        """
        Test that conditionals render with a bar and lower-case symbols.
        """
        self.assertEqual(render_text(p("Y", "A")), "p(y|a)")

    def test_plugs(self):
        """
        Test that label plugs keep the symbol and integer plugs show the value.
        """
        self.assertEqual(render_text(Plug("A", "a", p("Y", "A"))), "p(y|a)")
        self.assertEqual(render_text(Plug("A", 0, p("Y", "A"))), "p(y|a=0)")

    def test_summed_variable_shadowing_a_plug(self):
        """
        Test that a variable summed under its own plug renders with a tilde.
        """
        node = Plug("A", "a", Sum(("A",), p("A")))

        self.assertEqual(render_text(node), "Σ_{a\u0303} p(a\u0303)")

    def test_quotient(self):
        """
        Test that quotients render inline as text and as a LaTeX fraction.
        """
        node = Quotient(p(("A", "Y")), p("A"))

        self.assertEqual(render_text(node), "p(a,y) / p(a)")
        self.assertEqual(render_latex(node), r"\frac{p(a,y)}{p(a)}")

    def test_derived_kernel_is_defined_below(self):
        """
        Test that derived kernels are labelled and defined in a where block.
        """
        node = p("Y", (), derived(p("Y", "A")))

        self.assertEqual(
            render_text(node).splitlines(),
            ["p_k1(y; do(a))", "where", "  p_k1(y; do(a)) := p(y|a)"],
        )

    def test_equal_kernels_share_a_label(self):
        """
        Test that equal kernels from different margins share one label and definition.
        """
        first = derived(p("Y", "A"))
        second = KernelRef(KernelTag.INDUCTIVE, ("Y",), ("A",), p("Y", "A"))
        self.assertEqual(first, second)

        lines = render_text(Product((p("Y", (), first), p("Y", (), second)))).splitlines()

        self.assertEqual(
            lines,
            ["p_k1(y; do(a)) p_k1(y; do(a))", "where", "  p_k1(y; do(a)) := p(y|a)"],
        )

    def test_bridge_equation(self):
        """
        Test that a bridge renders as a call plus its defining equation.
        """
        solve = BridgeSolve("b1", ("W",), Product(()), p("W", "Z", WZ), ("Z",))

        self.assertEqual(
            render_text(solve).splitlines(),
            ["b1(w)", "where", "  1 = Σ_{w} b1(w) p(w|z)"],
        )
        self.assertTrue(render_latex(solve).startswith("b_{1}(w)"))


class TestSimplify(TestCase):
    def test_sum_absorbed_into_density(self):
        """
        Test that summing a density's own variable marginalizes it.
        """
        self.assertEqual(simplify(Sum(("Y",), p(("A", "Y")))), p("A"))

    def test_conditional_sums_to_one(self):
        """
        Test that a conditional summed over all its variables vanishes.
        """
        self.assertEqual(simplify(Sum(("Y",), p("Y", "A"))), Product(()))

    def test_sum_pushed_into_single_factor(self):
        """
        Test that a sum moves into the only factor that mentions it.
        """
        node = Sum(("W",), Product((p("Y", "A"), p("W", (), WZ))))

        self.assertEqual(simplify(node), p("Y", "A"))

    def test_cancellation_and_dead_plugs(self):
        """
        Test that equal factors cancel and plugs of absent variables drop.
        """
        node = Quotient(Product((p("A"), p("Y"))), p("A"))

        self.assertEqual(simplify(node), p("Y"))
        self.assertEqual(simplify(Plug("C", 1, p("Y"))), p("Y"))

    def test_full_kernel_is_inlined(self):
        """
        Test that a density over a kernel's whole scope is replaced by its
        definition.
        """
        definition = p("Y", "A")

        self.assertEqual(simplify(p("Y", (), derived(definition))), definition)
        kept = simplify(p("Y", (), derived(definition)), inline_kernels=False)
        self.assertIsInstance(kept, Density)


class TestEvaluate(TestCase):
    def setUp(self):
        super(TestEvaluate, self).setUp()
        self.env = DiscreteDistribution(("A", "Y"), [[0.1, 0.3], [0.2, 0.4]])

    def test_conditional(self):
        """
        Test that a conditional divides the joint by the margin.
        """
        table = Evaluator(self.env)(p("Y", "A"))

        np.testing.assert_allclose(
            table.aligned(("A", "Y")), [[0.25, 0.75], [1 / 3, 2 / 3]]
        )

    def test_integer_plug_selects(self):
        """
        Test that an integer plug selects one category.
        """
        table = Evaluator(self.env)(Plug("A", 1, p("Y", "A")))

        self.assertEqual(table.variables, ("Y",))
        np.testing.assert_allclose(table.values, [1 / 3, 2 / 3])

    def test_quotient_matches_conditional(self):
        """
        Test that p(a,y) / p(a) evaluates like p(y|a).
        """
        evaluator = Evaluator(self.env)
        quotient = evaluator(Quotient(p(("A", "Y")), p("A")))

        self.assertLess(quotient.max_abs_diff(evaluator(p("Y", "A"))), 1e-12)

    def test_positivity(self):
        """
        Test that dividing by a zero-mass stratum names the stratum.
        """
        env = DiscreteDistribution(("A", "Y"), [[0.5, 0.5], [0.0, 0.0]])

        with self.assertRaises(PositivityError) as ctx:
            Evaluator(env)(p("Y", "A"))
        self.assertEqual(ctx.exception.stratum, {"A": 1})

    def test_strict_range(self):
        """
        Test that strict evaluation refuses values outside [0, 1].
        """
        node = Quotient(p("A"), p(("A", "Y")))

        with self.assertRaises(EstimandError):
            Evaluator(self.env)(node)
        table = Evaluator(self.env, strict=False)(node)
        self.assertGreater(float(table.values.max()), 1.0)

    def test_bridge_solution_and_report(self):
        """
        Test that a bridge against a full-rank kernel solves exactly.
        """
        env = DiscreteDistribution(("W", "Z"), [[0.3, 0.1], [0.1, 0.5]])
        solve = BridgeSolve("b1", ("W",), Product(()), p("W", "Z", WZ), ("Z",))
        evaluator = Evaluator(env)

        table = evaluator(solve)

        np.testing.assert_allclose(table.aligned(("W",)), [1.0, 1.0])
        report = evaluator.reports["b1"]
        self.assertTrue(report.rank_ok)
        self.assertLess(report.residual, 1e-10)
        self.assertEqual(report.strata, 1)

    def test_bridge_rank_deficient(self):
        """
        Test that an independent instrument fails the rank check.
        """
        env = DiscreteDistribution(("W", "Z"), np.outer([0.4, 0.6], [0.3, 0.7]))
        solve = BridgeSolve("b1", ("W",), Product(()), p("W", "Z", WZ), ("Z",))
        evaluator = Evaluator(env)

        evaluator(solve)

        self.assertFalse(evaluator.reports["b1"].rank_ok)

    def test_bridge_inconsistent(self):
        """
        Test that a bridge equation without a solution raises.
        """
        env = DiscreteDistribution(("W", "Z"), np.outer([0.4, 0.6], [0.3, 0.7]))
        solve = BridgeSolve("b1", ("W",), p("Z", (), WZ), p("W", "Z", WZ), ("Z",))

        with self.assertRaises(BridgeResidualError) as ctx:
            Evaluator(env)(solve)
        self.assertEqual(ctx.exception.bridge_id, "b1")
