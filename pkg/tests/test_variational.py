# tests/test_variational.py

import math
import unittest
from unittest import mock

import numpy as np

from models.errors import GridError, ParameterError, RegimeRefused, SolverFailure
from models.graph_library import (cycle_covering_graph, fat_line_graph, signpost_graph, star_pendant_graph,
                                  tadpole_graph, terminal_cycle_graph)
from models.reports import SolverReport
from nls.flow import SobolevDescent
from nls.variational import (NlsProblem, bound_state_at_multiplier, check_critical_energy, competitor_seed, energy,
                             energy_gradient, ground_state, kinetic, lagrange_multiplier, mass, residual)


def _core_constant(prob):
    return prob.grid.interpolate(lambda e, x: np.zeros_like(x) if e.halfline else np.ones_like(x))


class TestEnergy(unittest.TestCase):

    def setUp(self):
        self.prob = NlsProblem.create(tadpole_graph(), 4, 1.0, h=0.1, trunc=5.0)

    def test_energy_of_core_constant(self):
        # 只有半直线第一个单元有梯度
        u = _core_constant(self.prob)
        self.assertAlmostEqual(energy(u, self.prob), 0.5 / 0.1 - 2.0 / 4.0, places=10)

    def test_mass_of_core_constant(self):
        u = _core_constant(self.prob)
        self.assertAlmostEqual(mass(u, self.prob), 2.0 + 0.1 / 3.0, places=12)

    def test_phase_invariance(self):
        u = competitor_seed(self.prob)
        rotated = np.exp(0.7j) * u
        self.assertAlmostEqual(energy(rotated, self.prob), energy(u, self.prob), places=12)
        self.assertAlmostEqual(mass(rotated, self.prob), mass(u, self.prob), places=12)

    def test_gradient_matches_difference_quotient(self):
        rng = np.random.default_rng(11)
        u = competitor_seed(self.prob) + 0.1 * rng.normal(size=self.prob.grid.n_dofs)
        v = rng.normal(size=u.size)
        eps = 1e-6
        numeric = (energy(u + eps * v, self.prob) - energy(u - eps * v, self.prob)) / (2 * eps)
        analytic = float(energy_gradient(u, self.prob) @ v)
        self.assertAlmostEqual(numeric / analytic, 1.0, delta=1e-6)

    def test_tent_energy(self):
        # 核 [0,2] 上的帐篷 min(x, 2-x)：½∫|u'|² = 1，¼∫u⁴ = 0.1
        prob = NlsProblem.create(fat_line_graph(2.0), 4, 1.0, h=0.02, trunc=5.0)
        u = prob.grid.interpolate(lambda e, x: np.zeros_like(x) if e.halfline else np.minimum(x, 2.0 - x))
        self.assertAlmostEqual(kinetic(u, prob), 2.0, places=10)
        self.assertAlmostEqual(energy(u, prob), 0.9, delta=1e-6)

    def test_core_term_of_constant(self):
        prob = NlsProblem.create(fat_line_graph(2.0), 4, 1.0, h=0.02, trunc=5.0)
        u = _core_constant(prob)
        self.assertAlmostEqual(energy(u, prob) - 0.5 * kinetic(u, prob), -0.5, places=10)

    def test_multiplier_from_integrals(self):
        u = np.ones(self.prob.grid.n_dofs)
        with mock.patch('nls.variational.kinetic', return_value=2.0), \
                mock.patch('nls.variational.simpson_power', return_value=3.0), \
                mock.patch('nls.variational.mass', return_value=1.0):
            self.assertAlmostEqual(lagrange_multiplier(u, self.prob), -1.0)

    def test_multiplier_without_core_mass_is_nonnegative(self):
        prob = NlsProblem.create(fat_line_graph(2.0), 4, 1.0, h=0.05, trunc=10.0)
        u = prob.grid.interpolate(lambda e, x: x * np.exp(-x) if e.halfline else np.zeros_like(x))
        self.assertGreaterEqual(lagrange_multiplier(u, prob), 0.0)

    def test_zero_field_has_no_multiplier(self):
        with self.assertRaises(ParameterError) as ctx:
            lagrange_multiplier(np.zeros(self.prob.grid.n_dofs), self.prob)
        self.assertEqual(ctx.exception.kind, "zero mass")

    def test_grid_mismatch(self):
        with self.assertRaises(GridError) as ctx:
            energy(np.ones(3), self.prob)
        self.assertEqual(ctx.exception.kind, "grid mismatch")

    def test_invalid_parameters(self):
        with self.assertRaises(ParameterError):
            NlsProblem.create(tadpole_graph(), 7, 1.0, h=0.1, trunc=5.0)
        with self.assertRaises(ParameterError):
            NlsProblem.create(tadpole_graph(), 4, 0.0, h=0.1, trunc=5.0)

    def test_projection_is_exact(self):
        flow = SobolevDescent(self.prob.ops, 3.0, lambda u: energy(u, self.prob),
                              lambda u: energy_gradient(u, self.prob))
        u = flow.project(competitor_seed(self.prob))
        self.assertAlmostEqual(mass(u, self.prob) / 3.0, 1.0, delta=1e-12)


class TestGroundState(unittest.TestCase):

    def test_line_soliton(self):
        prob = NlsProblem.create(fat_line_graph(40.0), 4, 4.0, h=0.02, trunc=30.0)
        report = ground_state(prob, seed="bump")
        self.assertTrue(report.converged)
        self.assertAlmostEqual(report.lagrange, -1.0, delta=0.02)
        self.assertAlmostEqual(report.energy, -2.0 / 3.0, delta=1e-2)

        core = prob.grid.edges[0]
        x = core.coordinates
        values = report.state[core.nodes]
        weights = values ** 2
        center = float(np.sum(x * weights) / np.sum(weights))
        soliton = math.sqrt(2.0) / np.cosh(x - center)
        self.assertLess(float(np.max(np.abs(values - soliton))), 1e-2)

    def test_archetypes_have_negative_energy_and_multiplier(self):
        # 每个质量都满足存在性条件 μ|K| > N²/2
        cases = [
            (tadpole_graph(), 2.0),
            (signpost_graph(), 2.0),
            (cycle_covering_graph(), 2.0),
            (terminal_cycle_graph(), 2.0),
            (star_pendant_graph(), 6.0),
        ]
        for g, mu in cases:
            with self.subTest(graph=repr(g)):
                prob = NlsProblem.create(g, 4, mu, h=0.05, trunc=20.0)
                report = ground_state(prob, tol=1e-7)
                self.assertTrue(report.energy_negative)
                self.assertTrue(report.multiplier_negative)
                self.assertAlmostEqual(report.mass / mu, 1.0, delta=1e-10)
                self.assertGreaterEqual(float(report.state.min()), -1e-10)

    def test_energy_history_is_monotone(self):
        prob = NlsProblem.create(tadpole_graph(), 4, 2.0, h=0.05, trunc=20.0)
        report = ground_state(prob, tol=1e-7)
        history = np.array(report.history)
        self.assertTrue(np.all(np.diff(history) <= 1e-12 * np.abs(history[1:]).max()))

    def test_subquartic_power(self):
        prob = NlsProblem.create(tadpole_graph(), 3, 1.0, h=0.05, trunc=20.0)
        report = ground_state(prob, tol=1e-7)
        self.assertLess(report.energy, 0.0)
        self.assertLess(report.lagrange, 0.0)
        self.assertLess(residual(report.state, report.lagrange, prob), 1e-7)

    def test_critical_power_refuses_large_mass(self):
        prob = NlsProblem.create(tadpole_graph(), 6, 3.0, h=0.1, trunc=5.0)
        with self.assertRaises(RegimeRefused) as ctx:
            ground_state(prob, mu_k=1.5)
        self.assertEqual(ctx.exception.kind, "unbounded regime")
        self.assertEqual(ctx.exception.exit_code, 3)

    def test_critical_power_below_threshold_is_inconclusive(self):
        # μ < μ_K 时下确界为 0 且不可达，流停在能量非负的驻点上
        mu_k = 1.658
        prob = NlsProblem.create(tadpole_graph(), 6, 0.8 * mu_k, h=0.05, trunc=30.0)
        with self.assertRaises(SolverFailure) as ctx:
            ground_state(prob, mu_k=mu_k)
        self.assertEqual(ctx.exception.kind, "inconclusive")
        self.assertEqual(ctx.exception.exit_code, 4)
        self.assertGreaterEqual(ctx.exception.partial.energy, -1e-8)

    def test_check_critical_energy(self):
        state = np.ones(4)
        positive = SolverReport(state, 0.0039, -0.1, 1e-10, 12, True, 1.0)
        with self.assertRaises(SolverFailure) as ctx:
            check_critical_energy(positive, 1e-8)
        self.assertEqual(ctx.exception.kind, "inconclusive")
        self.assertIs(ctx.exception.partial, positive)
        check_critical_energy(SolverReport(state, -0.1, -0.5, 1e-10, 12, True, 1.0), 1e-8)

    def test_homothety_scaling(self):
        # p=4 时 G → G/σ、μ → σμ 使能量乘以 σ³
        prob = NlsProblem.create(tadpole_graph(), 4, 1.0, h=0.05, trunc=20.0)
        scaled = NlsProblem.create(tadpole_graph().scaled(0.5), 4, 2.0, h=0.025, trunc=10.0)
        base = ground_state(prob, tol=1e-7)
        shrunk = ground_state(scaled, tol=1e-7)
        self.assertAlmostEqual(shrunk.energy / base.energy, 8.0, delta=1e-3)
        self.assertAlmostEqual(shrunk.lagrange / base.lagrange, 4.0, delta=1e-3)

    def test_truncation_length_doubling(self):
        short = ground_state(NlsProblem.create(tadpole_graph(), 4, 2.0, h=0.05, trunc=15.0), tol=1e-8)
        long = ground_state(NlsProblem.create(tadpole_graph(), 4, 2.0, h=0.05, trunc=30.0), tol=1e-8)
        self.assertLess(abs(short.energy - long.energy), 1e-6)

    def test_iteration_budget_is_shared(self):
        prob = NlsProblem.create(tadpole_graph(), 4, 2.0, h=0.05, trunc=20.0)
        with self.assertRaises(SolverFailure) as ctx:
            ground_state(prob, tol=1e-15, max_iter=5)
        self.assertLessEqual(ctx.exception.partial.iterations, 5)


class TestSobolevDescent(unittest.TestCase):

    def test_run_honours_iteration_limit(self):
        prob = NlsProblem.create(tadpole_graph(), 4, 2.0, h=0.05, trunc=20.0)
        flow = SobolevDescent(prob.ops, prob.mu, lambda u: energy(u, prob), lambda u: energy_gradient(u, prob),
                              tol=1e-15, max_iter=100)
        result = flow.run(competitor_seed(prob), max_iter=3)
        self.assertLessEqual(result.iterations, 3)
        self.assertFalse(result.converged)
        self.assertEqual(flow.run(competitor_seed(prob), max_iter=0).iterations, 0)


class TestFixedMultiplier(unittest.TestCase):

    def test_nonnegative_multiplier_rejected(self):
        prob = NlsProblem.create(tadpole_graph(), 4, 1.0, h=0.1, trunc=5.0)
        with self.assertRaises(ParameterError):
            bound_state_at_multiplier(prob, 0.5)

    def test_bound_state_hits_target_multiplier(self):
        prob = NlsProblem.create(tadpole_graph(), 4, 1.0, h=0.05, trunc=20.0)
        report = bound_state_at_multiplier(prob, -1.0, tol=1e-8)
        self.assertEqual(report.lagrange, -1.0)
        self.assertLess(report.residual, 1e-8)
        self.assertLess(residual(report.state, -1.0, prob.with_mass(report.mass)), 1e-8)


if __name__ == '__main__':
    unittest.main()
