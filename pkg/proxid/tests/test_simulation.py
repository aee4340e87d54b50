from __future__ import annotations

import math
import os
import tempfile
from unittest import TestCase, mock, skipUnless

import numpy as np
import pandas as pd

from proxid import settings
from proxid.estimands import Evaluator
from proxid.exceptions import BridgeResidualError, ConfigError, EstimationError
from proxid.identification import proximal_identify
from proxid.simulation import (
    EDGES,
    GmmSpec,
    LinearSem,
    Mode,
    bootstrap_ci,
    estimate,
    fit_linear_bridge,
    load_config,
    parse_config,
    read_results,
    render_table,
    run_experiment,
    sample_dataset,
    sample_dgp,
    true_ate,
    write_results,
)
from proxid.simulation.sem import parse_edge

from .factories import asset_path, load_asset_graph, load_asset_query, slow_tests_enabled


def flat_sem(value=0.5, mode=Mode.GAUSSIAN):
    return LinearSem({edge: value for edge in EDGES}, mode)


class TestConfig(TestCase):
    def test_defaults_and_sweep(self):
        """
        Test that a sweep expands into one setting per value.
        """
        config = parse_config("n=100\nsweep=A_Y+M_Y:0,0.5\noverride.U_Z=1\n")

        self.assertEqual(config.n, 100)
        self.assertEqual(config.bootstrap, 0)
        labels = [s.label for s in config.settings()]
        self.assertEqual(labels, ["A_Y=M_Y=0", "A_Y=M_Y=0.5"])
        overrides = config.settings()[1].as_dict()
        self.assertEqual(overrides[("A", "Y")], 0.5)
        self.assertEqual(overrides[("M", "Y")], 0.5)
        self.assertEqual(overrides[("U", "Z")], 1.0)

    def test_without_sweep(self):
        """
        Test that a config without a sweep has a single base setting.
        """
        (setting,) = parse_config("mode=binary").settings()

        self.assertEqual(setting.label, "base")

    def test_errors_are_collected(self):
        """
        Test that every bad line is reported with its line number.
        """
        with self.assertRaises(ConfigError) as caught:
            parse_config("n=ten\ncolour=red\nn_dgps=2\nn_dgps=3\nsweep=A_Q:1\n", source="x.cfg")
        message = str(caught.exception)
        self.assertIn("x.cfg: line 1", message)
        self.assertIn("unknown key 'colour'", message)
        self.assertIn("duplicate key 'n_dgps'", message)
        self.assertIn("line 5", message)

    def test_value_ranges(self):
        """
        Test that counts, bootstrap sizes, levels and estimators are checked.
        """
        for text in ("n=0", "bootstrap=1", "level=1.5", "estimators=oracle,magic", ""):
            with self.assertRaises(ConfigError, msg=text):
                parse_config(text)

    def test_load_bundled(self):
        """
        Test that the bundled table configurations load.
        """
        config = load_config(asset_path("sweep_direct.cfg"))

        self.assertEqual(config.name, "sweep_direct")
        self.assertEqual(len(config.settings()), 4)
        self.assertEqual(config.bootstrap, 64)

    def test_seed_from_environment(self):
        """
        Test that the seed environment variable overrides the file.
        """
        with mock.patch.dict(os.environ, {settings.SEED_ENV: "17"}):
            config = load_config(asset_path("sweep_direct.cfg"))
        self.assertEqual(config.seed, 17)

        with mock.patch.dict(os.environ, {settings.SEED_ENV: "x"}):
            with self.assertRaises(ConfigError):
                load_config(asset_path("sweep_direct.cfg"))

    def test_missing_file(self):
        """
        Test that an unreadable file is a configuration error.
        """
        with self.assertRaises(ConfigError):
            load_config("/nonexistent/experiment.cfg")


class TestSem(TestCase):
    def test_edges(self):
        """
        Test that edges parse in both spellings and must exist.
        """
        self.assertEqual(parse_edge("A_Y"), ("A", "Y"))
        self.assertEqual(parse_edge("A->Y"), ("A", "Y"))
        with self.assertRaises(ConfigError):
            parse_edge("Y_A")

    def test_edge_list_matches_bundled_graph(self):
        """
        Test that the SEM and the bundled graph agree, with Z upstream of A.
        """
        graph = load_asset_graph("proximal_frontdoor")

        self.assertEqual(graph.directed, frozenset(EDGES))
        self.assertIn(("Z", "A"), EDGES)
        self.assertEqual(parse_edge("Z_A"), ("Z", "A"))
        with self.assertRaises(ConfigError) as caught:
            parse_edge("A_Z")
        self.assertIn("Z_A", str(caught.exception))

    def test_coefficients_cover_edges(self):
        """
        Test that a SEM needs one finite coefficient per edge.
        """
        with self.assertRaises(ConfigError):
            LinearSem({("A", "Y"): 1.0})
        coefficients = {edge: 0.0 for edge in EDGES}
        coefficients[("A", "Y")] = math.inf
        with self.assertRaises(ConfigError):
            LinearSem(coefficients)

    def test_path_sum(self):
        """
        Test that the Gaussian effect sums every directed path from A to Y.
        """
        sem = flat_sem(0.5)

        self.assertAlmostEqual(sem.path_sum(), 0.5 + 0.25 + 0.125)
        self.assertAlmostEqual(true_ate(sem.with_overrides({"A_Y": 0.0})), 0.375)

    def test_sample_dgp_is_seeded(self):
        """
        Test that the coefficients depend only on the seed.
        """
        first, second = sample_dgp([0, 1]), sample_dgp([0, 1])

        self.assertEqual(dict(first.coefficients), dict(second.coefficients))
        self.assertTrue(all(-2 <= v <= 2 for v in first.coefficients.values()))
        self.assertNotEqual(dict(first.coefficients), dict(sample_dgp([0, 2]).coefficients))

    def test_modes(self):
        """
        Test which columns are binary in each mode.
        """
        gaussian = sample_dataset(flat_sem(), 200, seed=0)
        binary = sample_dataset(flat_sem(mode=Mode.BINARY), 200, seed=0)

        self.assertEqual(list(gaussian.columns), ["C", "U", "Z", "A", "M", "W", "Y"])
        self.assertTrue(gaussian["A"].isin((0, 1)).all())
        self.assertFalse(gaussian["Y"].isin((0, 1)).all())
        self.assertTrue(binary["M"].isin((0, 1)).all())
        self.assertTrue(binary["Z"].isin((0, 1)).all())

    def test_discrete_scm_only_in_discrete_mode(self):
        """
        Test that only discrete-mode SEMs convert to an exact SCM.
        """
        with self.assertRaises(ConfigError):
            flat_sem().to_discrete_scm()
        scm = flat_sem(mode=Mode.DISCRETE).to_discrete_scm()
        self.assertNotIn("U", scm.observed_vertices)

    def test_frontdoor_estimand_matches_discrete_truth(self):
        """
        Test that the identified proximal front-door estimand recovers the
        exact effect of a discrete-mode SEM.
        """
        graph = load_asset_graph("proximal_frontdoor")
        query = load_asset_query("proximal_frontdoor")
        estimand = proximal_identify(graph, query).estimand
        checked = 0
        for seed in range(4):
            sem = sample_dgp(seed, Mode.DISCRETE)
            evaluator = Evaluator(sem.to_discrete_scm().observed(), residual_tolerance=1e-6)
            try:
                table = evaluator(estimand)
            except BridgeResidualError:
                continue
            if not all(r.rank_ok for r in evaluator.reports.values()):
                continue
            checked += 1
            values = table.expand(("A", "Y"), {"A": 2, "Y": 2}).values
            self.assertAlmostEqual(values[1, 1] - values[0, 1], true_ate(sem), places=6)
        self.assertGreater(checked, 0)


class TestEstimators(TestCase):
    def setUp(self):
        super(TestEstimators, self).setUp()
        self.sem = flat_sem(0.5)
        self.data = sample_dataset(self.sem, 20000, seed=3)

    def test_oracle(self):
        """
        Test that adjusting for the hidden confounder recovers the path sum.
        """
        self.assertAlmostEqual(estimate("oracle", self.data), self.sem.path_sum(), delta=0.1)

    def test_hidden_column_is_masked(self):
        """
        Test that estimators other than the oracle never see U.
        """
        with self.assertRaises(EstimationError):
            estimate("oracle", self.data.drop(columns=["U"]))
        self.assertTrue(np.isfinite(estimate("naive_frontdoor", self.data)))

    def test_unknown_estimator(self):
        """
        Test that unknown estimator names are configuration errors.
        """
        with self.assertRaises(ConfigError):
            estimate("magic", self.data)

    def test_gmm_bridge(self):
        """
        Test that two-step GMM recovers a linear bridge with an endogenous regressor.
        """
        rng = np.random.default_rng(0)
        n = 5000
        hidden = rng.standard_normal(n)
        z = hidden + rng.standard_normal(n)
        a = (rng.random(n) < 0.5).astype(float)
        c = rng.standard_normal(n)
        w = hidden + 0.5 * rng.standard_normal(n)
        y = 1.0 + 2.0 * w + 0.5 * a - c + 0.1 * rng.standard_normal(n)
        frame = pd.DataFrame({"Y": y, "W": w, "A": a, "C": c, "Z": z})

        fit = fit_linear_bridge(frame, GmmSpec("Y", ("W", "A", "C"), ("Z", "A", "C")))

        self.assertAlmostEqual(fit.params["W"], 2.0, delta=0.1)
        self.assertAlmostEqual(fit.params["A"], 0.5, delta=0.1)
        self.assertLess(fit.moment_norm, 1e-6)

    def test_gmm_needs_enough_instruments(self):
        """
        Test that an under-identified bridge is refused.
        """
        with self.assertRaises(ConfigError):
            GmmSpec("Y", ("W", "A"), ("Z",))

    def test_proximal_frontdoor_runs(self):
        """
        Test that the proximal front-door pipeline returns a finite estimate.
        """
        value = estimate(
            "proximal_frontdoor", self.data.iloc[:2000], np.random.default_rng(1), trajectories=5
        )

        self.assertTrue(np.isfinite(value))

    def test_discrete_bridge_needs_binary_data(self):
        """
        Test that the linear-system bridge estimator refuses continuous columns.
        """
        with self.assertRaises(EstimationError):
            estimate("discrete_bridge", self.data)

        data = sample_dataset(flat_sem(0.2, Mode.DISCRETE), 50000, seed=0)
        self.assertTrue(np.isfinite(estimate("discrete_bridge", data)))

    def test_bootstrap(self):
        """
        Test that percentile intervals are ordered and count their resamples.
        """
        interval = bootstrap_ci("oracle", self.data.iloc[:1000], resamples=10, seed=4)

        self.assertLessEqual(interval.low, interval.high)
        self.assertEqual(interval.successes, 10)
        self.assertEqual(interval.failures, 0)
        with self.assertRaises(ConfigError):
            bootstrap_ci("oracle", self.data, resamples=1)


class TestExperiment(TestCase):
    def setUp(self):
        super(TestExperiment, self).setUp()
        self.config = parse_config(
            "name=tiny\nn_dgps=2\ndatasets_per_dgp=2\nn=300\n"
            "estimators=oracle,naive_frontdoor\nsweep=A_Y:0,1\n"
        )

    def test_grid(self):
        """
        Test that every setting and estimator gets a metric row.
        """
        report = run_experiment(self.config)

        self.assertEqual(len(report.metrics), 4)
        self.assertEqual(len(report.cells), 2 * 2 * 2 * 2)
        metric = report.metric("A_Y=1", "oracle")
        self.assertEqual(metric.label, "Oracle Backdoor")
        self.assertEqual(metric.evaluated, 4)
        self.assertTrue(math.isnan(metric.coverage))
        self.assertGreaterEqual(metric.mean_absolute_bias, 0.0)

    def test_reproducible(self):
        """
        Test that two runs of the same config agree exactly.
        """
        first = run_experiment(self.config).to_frame()
        second = run_experiment(self.config).to_frame()

        pd.testing.assert_frame_equal(first, second)

    def test_write_and_render(self):
        """
        Test that written results render into a table without a coverage block.
        """
        report = run_experiment(self.config)
        with tempfile.TemporaryDirectory() as tmp:
            paths = write_results(report, tmp)
            self.assertTrue(all(os.path.exists(p) for p in paths))
            text = render_table(read_results(paths[0]), title="tiny")

        self.assertTrue(text.startswith("tiny\n"))
        self.assertIn("Naive Front-Door", text)
        self.assertIn("Mean Absolute Bias", text)
        self.assertNotIn("Coverage", text)

    def test_render_empty(self):
        """
        Test that an empty results frame renders a placeholder.
        """
        self.assertEqual(render_table(pd.DataFrame()), "(no results)\n")

    @skipUnless(slow_tests_enabled(), "slow tests disabled")
    def test_coverage_with_bootstrap(self):
        """
        Test that the oracle interval covers the truth most of the time.
        """
        config = self.config.replace(
            estimators=("oracle",), bootstrap=20, n=1000, datasets_per_dgp=10
        )

        report = run_experiment(config, jobs=2)

        for setting in config.settings():
            self.assertGreater(report.metric(setting.label, "oracle").coverage, 0.6)
