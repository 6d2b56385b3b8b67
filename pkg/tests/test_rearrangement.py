# tests/test_rearrangement.py

import unittest

import numpy as np

from discretization.grid import build_grid
from models.errors import ParameterError
from models.graph_library import fat_line_graph, signpost_graph, tadpole_graph, terminal_graph
from rearrangement.rearrange import (decreasing_rearrangement, distribution, field_norms, has_two_preimages,
                                     preimage_counts, profile_distribution, profile_norms, symmetric_rearrangement)


def _random_field(grid, rng, bumps=4):
    """若干 Gauss 凸包的非负叠加，顶点处连续，截断端为 0。"""
    params = [(e.name, rng.uniform(0, e.length), rng.uniform(0.2, 1.5), rng.uniform(0.3, 2.0))
              for e in grid.edges for _ in range(bumps)]

    def profile(e, x):
        values = np.zeros_like(x)
        for name, center, amplitude, width in params:
            if name == e.name:
                values += amplitude * np.exp(-((x - center) / width) ** 2)
        return values

    return grid.interpolate(profile)


class TestDistribution(unittest.TestCase):

    def test_constant_core(self):
        grid = build_grid(tadpole_graph(), 0.1, 5.0)
        u = grid.interpolate(lambda e, x: np.zeros_like(x) if e.halfline else 0.8 * np.ones_like(x))
        dist = distribution(u, grid)
        self.assertAlmostEqual(float(dist(0.4)), 2.0 + 0.05, places=12)
        self.assertAlmostEqual(float(dist(0.8)), 0.0)
        self.assertAlmostEqual(float(dist(-1.0)), grid.total_length)
        self.assertAlmostEqual(dist.maximum, 0.8)

    def test_distribution_is_nonincreasing(self):
        grid = build_grid(signpost_graph(), 0.05, 8.0)
        u = _random_field(grid, np.random.default_rng(1))
        dist = distribution(u, grid)
        levels = np.linspace(0, u.max(), 300)
        self.assertTrue(np.all(np.diff(dist(levels)) <= 1e-12))

    def test_two_tents(self):
        # 高 1、斜率 ±1 的帐篷在 [0.5, 2.5]，高 2、斜率 ±2 的帐篷在 [3.5, 5.5]
        grid = build_grid(fat_line_graph(6.0), 0.05, 4.0)

        def tents(e, x):
            if e.halfline:
                return np.zeros_like(x)
            return np.maximum(0.0, 1.0 - np.abs(x - 1.5)) + np.maximum(0.0, 2.0 - 2.0 * np.abs(x - 4.5))

        dist = distribution(grid.interpolate(tents), grid)
        levels = np.array([0.1, 0.5, 0.99, 1.0, 1.5, 1.9])
        expected = 2.0 * np.maximum(0.0, 1.0 - levels) + 2.0 * np.maximum(0.0, 1.0 - levels / 2.0)
        np.testing.assert_allclose(dist(levels), expected, atol=1e-12)
        self.assertAlmostEqual(dist.maximum, 2.0)

    def test_negative_values_rejected(self):
        grid = build_grid(tadpole_graph(), 0.1, 5.0)
        u = -np.ones(grid.n_dofs)
        with self.assertRaises(ParameterError) as ctx:
            distribution(u, grid)
        self.assertEqual(ctx.exception.kind, "negative values")

    def test_grid_mismatch(self):
        grid = build_grid(tadpole_graph(), 0.1, 5.0)
        with self.assertRaises(ParameterError) as ctx:
            distribution(np.ones(4), grid)
        self.assertEqual(ctx.exception.kind, "grid mismatch")


class TestRearrangements(unittest.TestCase):

    def setUp(self):
        self.rng = np.random.default_rng(2024)

    def test_equimeasurable_and_polya_szego(self):
        for g in (tadpole_graph(), signpost_graph(), fat_line_graph(4.0)):
            grid = build_grid(g, 0.02, 8.0)
            for trial in range(1000):
                u = _random_field(grid, self.rng)
                star = decreasing_rearrangement(u, grid)
                original = field_norms(u, grid)
                rearranged = profile_norms(star)
                for key in ("L2", "L4", "L6"):
                    self.assertAlmostEqual(rearranged[key] / original[key], 1.0, delta=5e-4,
                                           msg=f"{g!r} trial {trial} {key}")
                self.assertLessEqual(rearranged['dirichlet'], original['dirichlet'] * (1 + 1e-9),
                                     msg=f"{g!r} trial {trial}")
                self.assertTrue(star.is_nonincreasing())

    def test_profile_distribution_matches(self):
        grid = build_grid(tadpole_graph(), 0.05, 8.0)
        u = _random_field(grid, self.rng)
        star = decreasing_rearrangement(u, grid)
        levels = np.linspace(0.05, 0.95, 7) * u.max()
        np.testing.assert_allclose(profile_distribution(star, levels), distribution(u, grid)(levels), atol=1e-9)

    def test_symmetric_is_even(self):
        grid = build_grid(fat_line_graph(4.0), 0.05, 8.0)
        u = _random_field(grid, self.rng)
        hat = symmetric_rearrangement(u, grid)
        self.assertTrue(hat.is_even())
        self.assertAlmostEqual(hat.x[-1], grid.total_length / 2)
        self.assertAlmostEqual(profile_norms(hat)['L2'] / field_norms(u, grid)['L2'], 1.0, delta=5e-4)

    def test_symmetric_polya_szego_with_two_preimages(self):
        # 核上为正、半直线上为零的场：(0, max u) 中每个水平至少有两个原像
        grid = build_grid(fat_line_graph(4.0), 0.02, 4.0)
        checked = 0
        for trial in range(200):
            base = _random_field(grid, self.rng)
            window = grid.interpolate(lambda e, x: np.zeros_like(x) if e.halfline else np.sin(np.pi * x / 4.0))
            u = base * window
            if not has_two_preimages(u, grid):
                continue
            checked += 1
            hat = symmetric_rearrangement(u, grid)
            original = field_norms(u, grid)
            rearranged = profile_norms(hat)
            self.assertLessEqual(rearranged['dirichlet'], original['dirichlet'] * (1 + 1e-9), msg=f"trial {trial}")
            for key in ("L2", "L4", "L6"):
                self.assertAlmostEqual(rearranged[key] / original[key], 1.0, delta=5e-4)
        self.assertGreater(checked, 150)

    def test_monotone_field_is_its_own_rearrangement(self):
        # 直线段上已单调递减的场重排后不变
        grid = build_grid(terminal_graph(4.0), 0.05, 6.0)
        u = grid.interpolate(lambda e, x: np.exp(-(4.0 - x)) if not e.halfline else np.exp(-4.0 - x))
        star = decreasing_rearrangement(u, grid)
        self.assertAlmostEqual(profile_norms(star)['dirichlet'] / field_norms(u, grid)['dirichlet'], 1.0, delta=1e-9)
        core = grid.edges[0]
        np.testing.assert_allclose(np.interp(4.0 - core.coordinates, star.x, star.values),
                                   u[core.nodes], rtol=1e-9)

    def test_rearrangement_is_idempotent(self):
        # u* 沿 terminal 图的路径（距自由端的距离 s）放回图上，再重排应得到 u* 本身
        source = build_grid(tadpole_graph(), 0.05, 8.0)
        star = decreasing_rearrangement(_random_field(source, self.rng), source)
        path = build_grid(terminal_graph(4.0), 0.05, 6.0)
        self.assertAlmostEqual(path.total_length, source.total_length)
        v = path.interpolate(lambda e, x: np.interp(4.0 + x if e.halfline else 4.0 - x, star.x, star.values))
        again = decreasing_rearrangement(v, path)
        s = np.linspace(0.0, path.total_length, 201)
        np.testing.assert_allclose(np.interp(s, again.x, again.values), np.interp(s, star.x, star.values),
                                   atol=1e-9)
        self.assertTrue(again.is_nonincreasing())


class TestPreimages(unittest.TestCase):

    def test_tent_has_two_preimages(self):
        grid = build_grid(fat_line_graph(4.0), 0.05, 6.0)
        u = grid.interpolate(lambda e, x: np.maximum(0.0, 1.0 - np.abs(x - 2.0)) if not e.halfline
                             else np.zeros_like(x))
        self.assertTrue(has_two_preimages(u, grid))
        counts = preimage_counts(u, grid, [0.5])
        self.assertEqual(counts[0], 2)

    def test_monotone_field_has_one_preimage(self):
        grid = build_grid(terminal_graph(4.0), 0.05, 6.0)
        u = grid.interpolate(lambda e, x: np.exp(-(4.0 - x)) if not e.halfline else np.exp(-4.0 - x))
        self.assertFalse(has_two_preimages(u, grid))

    def test_plateau_counts_as_infinite(self):
        grid = build_grid(tadpole_graph(), 0.1, 5.0)
        u = grid.interpolate(lambda e, x: np.zeros_like(x) if e.halfline else np.ones_like(x))
        self.assertTrue(np.isinf(preimage_counts(u, grid, [1.0])[0]))


if __name__ == '__main__':
    unittest.main()
