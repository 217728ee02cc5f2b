import math
import unittest

import numpy as np

from tailoredbell.exceptions import ScenarioError
from tailoredbell.mixins.analysis import (KeyConvention, RatioKind, asymptotic_limits, cglmp_optimal_state,
                                          conditional_entropy, conditional_entropy_table, critical_visibility,
                                          entanglement_entropy, ideal_key_rate, key_entropy_report,
                                          key_observables, mutual_information, mutual_information_table,
                                          ratio_expansion, ratio_table, ratio_tables, shannon_entropy,
                                          violation_vs_noise)
from tailoredbell.mixins.bounds import classical_bound, ns_bound, quantum_bound
from tailoredbell.mixins.expression import correlator_form_value
from tailoredbell.mixins.kernel import (Ket, Side, behaviour_from_quantum, cglmp_observables, joint_distribution,
                                        max_entangled, product_state, random_observables, schmidt_state,
                                        uniform_behaviour, white_noise_mix)
from tailoredbell.mixins.scenario import Scenario
from tailoredbell.workbench import Workbench
from tests.helpers import random_ket, read_config

# rows d = 2..6, columns m = 2..6
QUANTUM_OVER_CLASSICAL = [
    [1.414, 1.299, 1.232, 1.189, 1.159],
    [1.291, 1.214, 1.167, 1.137, 1.116],
    [1.252, 1.186, 1.146, 1.120, 1.102],
    [1.233, 1.173, 1.136, 1.112, 1.095],
    [1.222, 1.165, 1.130, 1.107, 1.091],
]
NS_OVER_QUANTUM = [
    [1.414, 1.155, 1.082, 1.051, 1.035],
    [1.366, 1.137, 1.073, 1.046, 1.031],
    [1.342, 1.128, 1.069, 1.043, 1.029],
    [1.328, 1.123, 1.066, 1.041, 1.028],
    [1.319, 1.120, 1.064, 1.040, 1.027],
]

CGLMP_KEY_ENTROPY = 0.0618


class TestAnalysis(unittest.TestCase):

    @classmethod
    def setUpClass(cls) -> None:
        cls.config = read_config()
        cls.table_tol = cls.config.getfloat('tolerance', 'table') + 1e-9
        cls.entropy_tol = cls.config.getfloat('tolerance', 'entropy')
        cls.tol = cls.config.getfloat('tolerance', 'identity')

    def test_tables(self):
        qc, nsq = ratio_tables(6, 6)
        self.assertEqual(qc.kind, RatioKind.QC)
        self.assertEqual(qc.d_values, (2, 3, 4, 5, 6))
        for table, expected in ((qc, QUANTUM_OVER_CLASSICAL), (nsq, NS_OVER_QUANTUM)):
            for i, d in enumerate(table.d_values):
                for j, m in enumerate(table.m_values):
                    self.assertAlmostEqual(table.entry(d, m), expected[i][j], delta=self.table_tol)
            np.testing.assert_allclose(table.rounded(), expected, atol=self.table_tol)

    def test_tables_exceed_one_and_decrease(self):
        qc, nsq = ratio_tables(10, 10)
        for table in (qc, nsq):
            self.assertTrue(np.all(table.entries > 1))
            small = table.entries[:5, :5]
            self.assertTrue(np.all(np.diff(small, axis=1) < 0))

    def test_custom_ranges(self):
        table = ratio_table("nsq", [3, 4], [5])
        self.assertEqual(table.entries.shape, (1, 2))
        self.assertAlmostEqual(table.entry(5, 4), ns_bound(Scenario(4, 5)) / quantum_bound(Scenario(4, 5)))
        with self.assertRaises(ScenarioError):
            table.entry(2, 2)
        with self.assertRaises(ScenarioError):
            ratio_table("qc", [], [2])

    def test_asymptotic_limits(self):
        limits = asymptotic_limits(2)
        self.assertAlmostEqual(limits["lim_qc"], 3 * math.pi / 8, places=12)
        self.assertAlmostEqual(limits["lim_nsq"], 4 / math.pi, places=12)
        s = Scenario(3, 10 ** 4)
        limits = asymptotic_limits(3)
        self.assertAlmostEqual(quantum_bound(s) / classical_bound(s), limits["lim_qc"], delta=1e-3)
        self.assertAlmostEqual(ns_bound(s) / quantum_bound(s), limits["lim_nsq"], delta=1e-3)
        large = asymptotic_limits(1000)
        self.assertAlmostEqual(large["lim_qc"], 1.0, delta=1e-2)
        self.assertAlmostEqual(large["lim_nsq"], 1.0, delta=1e-2)

    def test_expansion(self):
        expansion = ratio_expansion(30, 10 ** 4)
        limits = asymptotic_limits(30)
        self.assertAlmostEqual(expansion["qc"], limits["lim_qc"], delta=1e-4)
        self.assertAlmostEqual(expansion["nsq"], limits["lim_nsq"], delta=1e-4)

    def test_critical_visibility(self):
        self.assertAlmostEqual(critical_visibility(Scenario(2, 3)), 0.2254810, places=6)
        self.assertAlmostEqual(critical_visibility(Scenario(2, 2)), 1 - math.sqrt(2) / 2, places=12)
        for m, d in [(2, 3), (3, 4)]:
            s = Scenario(m, d)
            eta = critical_visibility(s)
            alice, bob = cglmp_observables(s, Side.ALICE), cglmp_observables(s, Side.BOB)
            at = behaviour_from_quantum(white_noise_mix(max_entangled(d), eta), alice, bob)
            self.assertAlmostEqual(correlator_form_value(s, at), classical_bound(s), delta=self.tol)
            above = behaviour_from_quantum(white_noise_mix(max_entangled(d), eta + 0.01), alice, bob)
            self.assertLess(correlator_form_value(s, above), classical_bound(s))

    def test_noise_scan(self):
        s = Scenario(3, 3)
        points = violation_vs_noise(s, np.linspace(0, 1, 11))
        self.assertAlmostEqual(points[0].value, 6.0, delta=self.tol)
        self.assertAlmostEqual(points[-1].value, 0.0, delta=self.tol)
        self.assertLessEqual(max(p.deviation for p in points), self.tol)

    def test_key_entropy(self):
        s = Scenario(2, 3)
        alice, bob = key_observables(s, KeyConvention.CONJUGATE)
        self.assertAlmostEqual(conditional_entropy_table(joint_distribution(max_entangled(3), alice, bob), 3),
                               0.0, delta=self.tol)
        h = conditional_entropy_table(joint_distribution(cglmp_optimal_state(), alice, bob), 3)
        self.assertAlmostEqual(h, CGLMP_KEY_ENTROPY, delta=self.entropy_tol)
        self.assertAlmostEqual(ideal_key_rate(h, 1 / 3, 3), 1 - CGLMP_KEY_ENTROPY, delta=self.entropy_tol)
        self.assertAlmostEqual(ideal_key_rate(0.0, 1 / 3, 3), 1.0, places=12)
        with self.assertRaises(ScenarioError):
            ideal_key_rate(0.0, 0.0, 3)

    def test_key_entropy_report(self):
        report = key_entropy_report(Scenario(2, 3))
        self.assertEqual(report["zero_on_max_entangled"], ["conjugate"])
        self.assertAlmostEqual(report["conjugate"], 0.0, delta=self.tol)
        self.assertGreater(report["identical"], 0.01)

    def test_entropy_ignores_round_off(self):
        """Entries a hair below zero count as zero"""
        joint = np.eye(3) / 3
        joint[0, 1] = -1e-17
        self.assertAlmostEqual(conditional_entropy_table(joint, 3), 0.0, delta=self.tol)
        self.assertAlmostEqual(mutual_information_table(joint, 3), 1.0, delta=self.tol)
        self.assertAlmostEqual(shannon_entropy([0.5, 0.5, -1e-18], 2), 1.0, places=12)

    def test_uniform_entropy(self):
        b = uniform_behaviour(Scenario(2, 4))
        self.assertAlmostEqual(conditional_entropy(b, 1, 2), 1.0, places=12)
        self.assertAlmostEqual(mutual_information(b, 2, 1), 0.0, places=12)
        self.assertAlmostEqual(conditional_entropy(b, 1, 2, base=2), 2.0, places=12)

    def test_entanglement_entropy(self):
        for d in range(2, 9):
            self.assertAlmostEqual(entanglement_entropy(max_entangled(d)), 1.0, delta=1e-12)
            self.assertAlmostEqual(entanglement_entropy(Ket(max_entangled(d).amplitudes)), 1.0, delta=1e-12)
        self.assertAlmostEqual(entanglement_entropy(product_state(3)), 0.0, delta=1e-12)
        e = entanglement_entropy(cglmp_optimal_state())
        self.assertTrue(0 < e < 1)

    def test_mutual_information_bound(self):
        rng = np.random.default_rng(23)
        for d in (2, 3, 4):
            for _ in range(10):
                state = schmidt_state(rng.random(d) + 0.05)
                alice = random_observables(d, 1, Side.ALICE, rng).projectors[0]
                bob = random_observables(d, 1, Side.BOB, rng).projectors[0]
                information = mutual_information_table(joint_distribution(state, alice, bob), d)
                self.assertLessEqual(information, entanglement_entropy(state) + 1e-12)

    def test_mutual_information_in_schmidt_basis(self):
        rng = np.random.default_rng(5)
        for d in (2, 3, 4):
            state = schmidt_state(rng.random(d) + 0.05)
            basis = [np.diag(row) for row in np.eye(d)]
            information = mutual_information_table(joint_distribution(state, basis, basis), d)
            self.assertAlmostEqual(information, entanglement_entropy(state), delta=self.tol)

    def test_random_state_entropy_paths_agree(self):
        rng = np.random.default_rng(6)
        psi = random_ket(3, rng)
        u, sigma, vh = np.linalg.svd(psi.matrix())
        self.assertAlmostEqual(entanglement_entropy(psi), entanglement_entropy(schmidt_state(sigma)), delta=1e-12)

    def test_mixin(self):
        bench = Workbench(2, 3)
        report = bench.get_key_entropy_report()
        self.assertAlmostEqual(report["conjugate"], CGLMP_KEY_ENTROPY, delta=self.entropy_tol)
        self.assertAlmostEqual(report["key_rate"], 1 - CGLMP_KEY_ENTROPY, delta=self.entropy_tol)
        self.assertAlmostEqual(bench.get_critical_visibility(), 0.2254810, places=6)
        self.assertEqual(len(bench.get_violation_vs_noise([0.0, 0.5])), 2)
        self.assertIn("lim_qc", bench.get_asymptotic_limits())


if __name__ == '__main__':
    unittest.main()
