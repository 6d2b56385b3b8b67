# tests/test_discretization.py

import math
import unittest

import numpy as np

from discretization.assembly import (assemble_dirac, assemble_laplacian, certify_spectral_gap, difference_matrix,
                                     laplacian_eigenvalues, lumped_node_weights)
from discretization.grid import build_grid
from discretization.quadrature import (exact_power, exact_power_gradient, simpson_power, simpson_power_gradient,
                                       simpson_power_jacobian)
from models.errors import GridError, ParameterError
from models.graph_library import fat_line_graph, tadpole_graph
from models.metric_graph import BoundedEdge, MetricGraph


def _linear_field(grid, trunc):
    """在 fat line 上分段线性且连续的场：核上 x+1，半直线上线性衰减到截断端的 0。"""
    def profile(e, x):
        if not e.halfline:
            return x + 1.0
        start = 1.0 if e.name == "h1" else 3.0
        return start * (1.0 - x / trunc)
    return grid.interpolate(profile)


class TestGrid(unittest.TestCase):

    def test_counts_and_dofs(self):
        grid = build_grid(tadpole_graph(), 0.25, 5.0)
        self.assertEqual(grid.counts, {"loop": 8, "h": 20})
        self.assertEqual(grid.n_dofs, 1 + 7 + 19)
        self.assertEqual(grid.n_elements, 28)
        self.assertAlmostEqual(grid.total_length, 7.0)
        self.assertEqual(int(grid.core.sum()), 8)

    def test_loop_shares_vertex_dof(self):
        grid = build_grid(tadpole_graph(), 0.25, 5.0)
        loop = grid.edges[0]
        self.assertEqual(loop.nodes[0], loop.nodes[-1])
        self.assertEqual(grid.edges[1].nodes[-1], grid.dirichlet)

    def test_minimum_three_elements(self):
        grid = build_grid(fat_line_graph(0.5), 0.25, 5.0)
        self.assertEqual(grid.counts["core"], 3)

    def test_edge_shorter_than_two_steps(self):
        with self.assertRaises(GridError) as ctx:
            build_grid(tadpole_graph(1.0), 0.6, 10.0)
        self.assertEqual(ctx.exception.kind, "edge shorter than 2h")

    def test_invalid_truncation(self):
        with self.assertRaises(GridError) as ctx:
            build_grid(tadpole_graph(), 0.1, 0.5)
        self.assertEqual(ctx.exception.kind, "invalid grid")
        with self.assertRaises(GridError):
            build_grid(tadpole_graph(), -0.1, 10.0)

    def test_prolong_is_exact_on_linear_fields(self):
        grid = build_grid(fat_line_graph(2.0), 0.1, 3.0)
        fine = grid.refined()
        self.assertAlmostEqual(fine.h, 0.05)
        self.assertEqual(fine.counts["core"], 2 * grid.counts["core"])
        np.testing.assert_allclose(grid.prolong(_linear_field(grid, 3.0)), _linear_field(fine, 3.0), atol=1e-12)

    def test_edge_samples_include_truncation_zero(self):
        grid = build_grid(fat_line_graph(2.0), 0.1, 3.0)
        samples = list(grid.edge_samples(_linear_field(grid, 3.0)))
        self.assertEqual(len(samples), grid.n_elements + len(grid.edges))
        last = [s for s in samples if s[0] == "h2"][-1]
        self.assertAlmostEqual(last[1], 3.0)
        self.assertEqual(last[2], 0.0)


class TestAssembly(unittest.TestCase):

    def test_core_mass_of_constant(self):
        grid = build_grid(tadpole_graph(), 0.1, 5.0)
        ops = assemble_laplacian(grid)
        ones = np.ones(grid.n_dofs)
        self.assertAlmostEqual(float(ones @ (ops.core_mass @ ones)), 2.0, places=12)
        self.assertAlmostEqual(float(lumped_node_weights(grid).sum()), grid.total_length - 0.05, places=12)

    def test_symmetry(self):
        ops = assemble_laplacian(build_grid(tadpole_graph(), 0.1, 5.0), alpha=0.7)
        self.assertAlmostEqual(abs(ops.stiffness - ops.stiffness.T).max(), 0.0)
        self.assertAlmostEqual(abs(ops.mass - ops.mass.T).max(), 0.0)

    def test_difference_matrix_on_linear_field(self):
        grid = build_grid(fat_line_graph(2.0), 0.1, 3.0)
        slopes = difference_matrix(grid) @ _linear_field(grid, 3.0)
        core = grid.element_edge == 0
        np.testing.assert_allclose(slopes[core], 1.0, atol=1e-12)

    def test_interval_eigenvalues(self):
        # Kirchhoff 条件下 fat line 截断后就是长 8 的区间，两端 Dirichlet
        ops = assemble_laplacian(build_grid(fat_line_graph(2.0), 0.05, 3.0))
        values = laplacian_eigenvalues(ops, k=3)
        exact = np.array([(k * math.pi / 8.0) ** 2 for k in (1, 2, 3)])
        np.testing.assert_allclose(values, exact, rtol=1e-3)

    def test_eigenvalue_convergence_order(self):
        exact = (math.pi / 8.0) ** 2
        errors = []
        for h in (0.2, 0.1):
            ops = assemble_laplacian(build_grid(fat_line_graph(2.0), h, 3.0))
            errors.append(abs(laplacian_eigenvalues(ops, k=1)[0] - exact))
        self.assertGreater(errors[0] / errors[1], 3.0)

    def test_delta_coupling_raises_spectrum(self):
        grid = build_grid(fat_line_graph(2.0), 0.1, 3.0)
        free = laplacian_eigenvalues(assemble_laplacian(grid, 0.0), k=1)[0]
        coupled = laplacian_eigenvalues(assemble_laplacian(grid, 1.0), k=1)[0]
        self.assertGreater(coupled, free)

    def test_dirac_parameters(self):
        grid = build_grid(tadpole_graph(), 0.1, 5.0)
        with self.assertRaises(ParameterError):
            assemble_dirac(grid, 0.0, 1.0)
        ops = assemble_dirac(grid, 1.0, 2.0)
        self.assertEqual(ops.dirac.shape, (grid.n_dofs + grid.n_elements,) * 2)
        self.assertAlmostEqual(abs(ops.dirac - ops.dirac.conj().T).max(), 0.0)

    def test_dirac_spectral_gap(self):
        ops = assemble_dirac(build_grid(fat_line_graph(2.0), 0.01, 15.0), 1.0, 1.0)
        gap = certify_spectral_gap(ops)
        self.assertGreaterEqual(gap, 0.99)
        self.assertLessEqual(gap, 1.01)

    def test_dirac_square_is_shifted_laplacian(self):
        # D²(f, 0) = ((-Δ + 1) f, 0)，m = c = 1，f = sin⁴(πx/4) 支在长 4 的核上
        a = math.pi / 4.0

        def f(e, x):
            return np.zeros_like(x) if e.halfline else np.sin(a * x) ** 4

        def target(e, x):
            if e.halfline:
                return np.zeros_like(x)
            s, co = np.sin(a * x), np.cos(a * x)
            return -4.0 * a * a * s * s * (3.0 * co * co - s * s) + s ** 4

        errors = []
        for h in (0.1, 0.05):
            grid = build_grid(fat_line_graph(4.0), h, 2.0)
            ops = assemble_dirac(grid, 1.0, 1.0)
            spinor = np.concatenate([grid.interpolate(f), np.zeros(grid.n_elements)]).astype(complex)
            once = (ops.dirac @ spinor) / ops.dirac_mass
            twice = (ops.dirac @ once) / ops.dirac_mass
            self.assertLess(float(np.abs(twice[grid.n_dofs:]).max()), 1e-10)
            errors.append(float(np.abs(twice[:grid.n_dofs] - grid.interpolate(target)).max()))
        self.assertGreater(errors[0] / errors[1], 3.0)
        self.assertLess(errors[1], 0.05)

    def test_stiffness_is_positive_semidefinite(self):
        ops = assemble_laplacian(build_grid(tadpole_graph(), 0.1, 5.0), alpha=0.7)
        self.assertGreaterEqual(float(np.linalg.eigvalsh(ops.stiffness.toarray()).min()), -1e-10)

    def test_single_edge_neumann_eigenvalues(self):
        # 长 π 的单边两端自由：特征值 k²
        edge = MetricGraph(vertices=("a", "b"), bounded_edges=(BoundedEdge("e", "a", "b", math.pi),),
                           half_lines=(), check=False)
        ops = assemble_laplacian(build_grid(edge, 0.05, 1.0))
        np.testing.assert_allclose(laplacian_eigenvalues(ops, k=2), [0.0, 1.0], atol=1e-3)
        ones = np.ones(ops.stiffness.shape[0])
        self.assertAlmostEqual(float(ones @ (ops.stiffness @ ones)), 0.0, places=10)


class TestQuadrature(unittest.TestCase):

    def setUp(self):
        self.grid = build_grid(tadpole_graph(), 0.1, 5.0)
        rng = np.random.default_rng(3)
        self.u = rng.uniform(0.2, 1.0, self.grid.n_dofs)

    def test_constant_field(self):
        ones = np.ones(self.grid.n_dofs)
        self.assertAlmostEqual(simpson_power(self.grid, ones, 4), 2.0, places=12)
        self.assertAlmostEqual(exact_power(self.grid, ones, 6, core_only=True), 2.0, places=12)

    def test_simpson_gradient_matches_difference_quotient(self):
        v = np.random.default_rng(5).normal(size=self.grid.n_dofs)
        eps = 1e-6
        numeric = (simpson_power(self.grid, self.u + eps * v, 4) - simpson_power(self.grid, self.u - eps * v, 4)) / (2 * eps)
        analytic = 4 * float(simpson_power_gradient(self.grid, self.u, 4) @ v)
        self.assertAlmostEqual(numeric / analytic, 1.0, delta=1e-6)

    def test_simpson_jacobian_matches_difference_quotient(self):
        v = np.random.default_rng(7).normal(size=self.grid.n_dofs)
        eps = 1e-6
        numeric = (simpson_power_gradient(self.grid, self.u + eps * v, 3.5)
                   - simpson_power_gradient(self.grid, self.u - eps * v, 3.5)) / (2 * eps)
        analytic = simpson_power_jacobian(self.grid, self.u, 3.5) @ v
        self.assertLess(np.linalg.norm(numeric - analytic), 1e-5 * np.linalg.norm(analytic))

    def test_exact_gradient_matches_difference_quotient(self):
        v = np.random.default_rng(9).normal(size=self.grid.n_dofs)
        eps = 1e-6
        numeric = (exact_power(self.grid, self.u + eps * v, 6, False)
                   - exact_power(self.grid, self.u - eps * v, 6, False)) / (2 * eps)
        analytic = float(exact_power_gradient(self.grid, self.u, 6, False) @ v)
        self.assertAlmostEqual(numeric / analytic, 1.0, delta=1e-6)


if __name__ == '__main__':
    unittest.main()
