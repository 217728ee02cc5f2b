import itertools
import math
import unittest

import numpy as np

from tailoredbell.exceptions import BudgetExceededError, CertificationError, ScenarioError
from tailoredbell.mixins.bounds import (BoundsReport, DeterministicStrategy, algebraic_bound, bounds_report,
                                        chained_bounds, classical_bound, classical_bound_bruteforce,
                                        classical_bound_dp, deterministic_behaviour, h_function, ns_bound,
                                        ns_extremal_behaviour, quantum_bound, quantum_value_at_optimal,
                                        strategy_from_outputs, strategy_value, two_setting_bounds)
from tailoredbell.mixins.expression import correlator_form_value, evaluate_probability_form, probability_form
from tailoredbell.mixins.kernel import check_no_signalling, local_marginals
from tailoredbell.mixins.scenario import (Scenario, cglmp_coefficients, coefficient_sum, folded_weights,
                                          hatted_alpha, s_value, tailored_coefficients)
from tailoredbell.workbench import Workbench
from tests.helpers import read_config


def naive_classical_maximum(s: Scenario, c) -> float:
    """Probability-form maximum over every raw output assignment."""
    f = probability_form(s, c)
    best = -math.inf
    for outputs in itertools.product(range(s.d), repeat=2 * s.m):
        b = deterministic_behaviour(s, outputs[:s.m], outputs[s.m:])
        best = max(best, evaluate_probability_form(f, b))
    return best


class TestBounds(unittest.TestCase):

    @classmethod
    def setUpClass(cls) -> None:
        cls.config = read_config()
        cls.tol = cls.config.getfloat('tolerance', 'bound')
        cls.identity_tol = cls.config.getfloat('tolerance', 'identity')

    def test_classical_values(self):
        self.assertAlmostEqual(classical_bound(Scenario(2, 2)), math.sqrt(2), delta=self.tol)
        self.assertAlmostEqual(classical_bound(Scenario(2, 3)), (1 + 3 * math.sqrt(3)) / 2, delta=self.tol)
        self.assertAlmostEqual(classical_bound(Scenario(2, 4)), 4.7927064, places=6)

    def test_special_cases(self):
        for m in range(2, 9):
            c, q, ns = chained_bounds(m)
            s = Scenario(m, 2)
            self.assertAlmostEqual(classical_bound(s), c, delta=self.tol)
            self.assertAlmostEqual(quantum_bound(s), q, delta=self.tol)
            self.assertAlmostEqual(ns_bound(s), ns, delta=self.tol)
        for d in range(2, 9):
            c, q, ns = two_setting_bounds(d)
            s = Scenario(2, d)
            self.assertAlmostEqual(classical_bound(s), c, delta=self.tol)
            self.assertAlmostEqual(quantum_bound(s), q, delta=self.tol)
            self.assertAlmostEqual(ns_bound(s), ns, delta=self.tol)

    def test_bruteforce_matches_closed_form(self):
        for m in range(2, 5):
            for d in range(2, 6):
                s = Scenario(m, d)
                result = classical_bound_bruteforce(s)
                self.assertAlmostEqual(result.value, classical_bound(s), delta=self.tol)
                self.assertEqual(result.argmax.q, (0,) * (2 * m - 1))
                self.assertEqual(result.evaluated, d ** (2 * m - 1))

    def test_bruteforce_threads(self):
        s = Scenario(3, 4)
        serial = classical_bound_bruteforce(s)
        threaded = classical_bound_bruteforce(s, workers=4)
        self.assertEqual(serial.value, threaded.value)
        self.assertEqual(serial.argmax, threaded.argmax)

    def test_dp(self):
        self.assertAlmostEqual(classical_bound_dp(Scenario(2, 2), hatted=True), 6.8284271, places=6)
        for m in range(2, 11):
            for d in range(2, 11):
                s = Scenario(m, d)
                self.assertAlmostEqual(classical_bound_dp(s), classical_bound(s), delta=self.tol)

    def test_dp_matches_large_enumeration(self):
        s = Scenario(5, 7)
        self.assertAlmostEqual(classical_bound_dp(s), classical_bound_bruteforce(s).value, delta=self.tol)

    def test_dp_custom_coefficients(self):
        s = Scenario(3, 4)
        c = cglmp_coefficients(4)
        self.assertAlmostEqual(classical_bound_dp(s, c=c), classical_bound_bruteforce(s, c).value, delta=self.tol)

    def test_cglmp_bruteforce(self):
        result = classical_bound_bruteforce(Scenario(2, 3), cglmp_coefficients(3))
        self.assertAlmostEqual(result.probability_value, 2.0, delta=self.tol)

    def test_naive_oracle(self):
        """The reduction to output differences loses nothing"""
        for m in (2, 3):
            for d in (2, 3):
                s = Scenario(m, d)
                for c in (tailored_coefficients(s), cglmp_coefficients(d)):
                    naive = naive_classical_maximum(s, c)
                    self.assertAlmostEqual(classical_bound_bruteforce(s, c).probability_value, naive,
                                           delta=self.tol)

    def test_strategy_reduction(self):
        s = Scenario(3, 3)
        c = tailored_coefficients(s)
        f = probability_form(s, c)
        weights = folded_weights(s, c)
        for outputs in itertools.product(range(3), repeat=6):
            alice, bob = outputs[:3], outputs[3:]
            strategy = strategy_from_outputs(s, alice, bob)
            value = evaluate_probability_form(f, deterministic_behaviour(s, alice, bob))
            self.assertAlmostEqual(strategy_value(s, strategy, weights), value, delta=self.tol)

    def test_random_strategies_stay_below(self):
        rng = np.random.default_rng(17)
        for m, d in [(3, 4), (4, 6)]:
            s = Scenario(m, d)
            hatted = hatted_alpha(s)
            top = (classical_bound(s) + m) * 2 / math.tan(math.pi / (2 * m))
            q = rng.integers(0, d, size=(50000, 2 * m - 1))
            values = hatted[q].sum(axis=1) + hatted[(-1 - q.sum(axis=1)) % d]
            self.assertLessEqual(values.max(), top + 1e-9)
            for row, value in zip(q[:200], values):
                self.assertAlmostEqual(strategy_value(s, DeterministicStrategy(d, tuple(row)), hatted), value,
                                       delta=1e-12)

    def test_strategy_validation(self):
        with self.assertRaises(ScenarioError):
            DeterministicStrategy(3, (0, 1))
        with self.assertRaises(ScenarioError):
            DeterministicStrategy(3, (0, 1, 3))
        self.assertEqual(DeterministicStrategy(3, (0, 0, 0)).last, 2)
        self.assertEqual(DeterministicStrategy(3, (0, 0, 0)).full(), (0, 0, 0, 2))

    def test_budget(self):
        with self.assertRaises(BudgetExceededError):
            classical_bound_bruteforce(Scenario(3, 3), budget=100)

    def test_h_function(self):
        for m, d in [(2, 3), (3, 5), (4, 4)]:
            s = Scenario(m, d)
            hatted = hatted_alpha(s)
            self.assertAlmostEqual(h_function(s)[0], hatted[0] + hatted[d - 1], delta=self.tol)

    def test_quantum(self):
        self.assertEqual(quantum_bound(Scenario(2, 3)), 4)
        self.assertEqual(quantum_bound(Scenario(2, 2)), 2)
        self.assertEqual(quantum_bound(Scenario(5, 6)), 25)
        self.assertAlmostEqual(quantum_value_at_optimal(Scenario(5, 6)), 25, delta=self.identity_tol)

    def test_no_signalling_bound(self):
        self.assertAlmostEqual(ns_bound(Scenario(2, 3)), 2 + 2 * math.sqrt(3), delta=self.tol)
        self.assertAlmostEqual(ns_bound(Scenario(2, 2)), 2 * math.sqrt(2), delta=self.tol)
        for m in range(2, 9):
            for d in range(2, 9):
                s = Scenario(m, d)
                self.assertAlmostEqual(ns_bound(s), d * algebraic_bound(s) - 2 * m * s_value(s), delta=self.tol)

    def test_ns_extremal_behaviour(self):
        s = Scenario(2, 3)
        b = ns_extremal_behaviour(s)
        f = probability_form(s, tailored_coefficients(s))
        self.assertAlmostEqual(evaluate_probability_form(f, b), 4 / math.sqrt(3), delta=self.tol)
        for m in range(2, 9):
            for d in range(2, 9):
                s = Scenario(m, d)
                b = ns_extremal_behaviour(s)
                self.assertTrue(check_no_signalling(b, 1e-12).ok)
                self.assertAlmostEqual(correlator_form_value(s, b), ns_bound(s), delta=self.tol)
                alice, bob = local_marginals(b)
                np.testing.assert_allclose(alice, 1 / d, atol=1e-12)
                np.testing.assert_allclose(bob, 1 / d, atol=1e-12)

    def test_ordering(self):
        for m in range(2, 11):
            for d in range(2, 11):
                self.assertTrue(bounds_report(Scenario(m, d)).ordered)

    def test_check_ordering(self):
        report = BoundsReport(Scenario(2, 2), 3.0, 2.0, 4.0, 1.0)
        with self.assertRaises(CertificationError) as ctx:
            report.check_ordering()
        self.assertEqual(ctx.exception.record["check"], "bound-ordering")

    def test_report_cross_check(self):
        report = bounds_report(Scenario(2, 3), budget=10 ** 6)
        self.assertAlmostEqual(report.bruteforce, report.classical, delta=self.tol)
        skipped = bounds_report(Scenario(4, 4), budget=10)
        self.assertIsNone(skipped.bruteforce)
        self.assertEqual(len(skipped.notes), 1)
        self.assertAlmostEqual(report.to_dict()["algebraic"], 4 / math.sqrt(3), delta=self.tol)

    def test_mixin(self):
        bench = Workbench(2, 3, budget=10 ** 4)
        report = bench.get_bounds_report(cross_check=True)
        self.assertAlmostEqual(report.bruteforce, 3.0980762, places=6)
        self.assertAlmostEqual(bench.get_classical_bound_dp(), bench.get_classical_bound(), delta=self.tol)
        self.assertAlmostEqual(bench.get_classical_bound_bruteforce("cglmp").probability_value, 2.0,
                               delta=self.tol)
        with self.assertRaises(BudgetExceededError):
            Workbench(4, 4, budget=10, defer_setup=True).get_bounds_report(cross_check=True)
        self.assertAlmostEqual(coefficient_sum(bench.get_coefficients()), bench.get_s_value(), delta=self.tol)
        self.assertEqual(bench.get_quantum_bound(), 4)
        self.assertAlmostEqual(bench.get_ns_bound(), 2 + 2 * math.sqrt(3), delta=self.tol)


if __name__ == '__main__':
    unittest.main()
