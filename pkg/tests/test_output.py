# tests/test_output.py

import os
import json
import math
import asyncio
import shutil
import tempfile
import unittest
from unittest import mock

import numpy as np
import scipy.sparse as sps

from discretization.assembly import assemble_laplacian
from discretization.grid import build_grid
from models.errors import ParameterError, SolverFailure
from models.graph_library import tadpole_graph
from models.reports import GNEstimate, LimitRow
from models.run_config import RunConfig
from output.writer import (dump_matrix, dump_operators, render_document, write_document,
                           write_limit_table, write_profile_csv, write_state_csv)
from validator.validator import ConfigValidator, run_sweep, sweep_concurrency


def _lines(path):
    with open(path, encoding='utf-8') as f:
        return f.read().splitlines()


class TestWriters(unittest.TestCase):

    def setUp(self):
        self.out = tempfile.mkdtemp(prefix='gratwave-')

    def tearDown(self):
        shutil.rmtree(self.out, ignore_errors=True)

    def test_render_is_sorted(self):
        text = render_document({'b': 1, 'a': [1.5, None]})
        self.assertTrue(text.endswith('\n'))
        self.assertLess(text.index('"a"'), text.index('"b"'))
        self.assertEqual(text, render_document({'a': [1.5, None], 'b': 1}))

    def test_sup_norm_exponent_is_valid_json(self):
        estimate = GNEstimate('sup-norm', math.inf, 0.5, np.zeros(3), [(0.1, 0.5)])
        text = render_document(estimate.to_dict())
        self.assertNotIn('Infinity', text)
        self.assertEqual(json.loads(text)['p'], 'inf')
        self.assertEqual(GNEstimate('whole-graph', 4, 0.3, np.zeros(3)).to_dict()['p'], 4)

    def test_document_creates_directory(self):
        target = os.path.join(self.out, 'nested', 'dir')
        path = write_document({'command': 'gn'}, target)
        with open(path, encoding='utf-8') as f:
            self.assertEqual(json.load(f), {'command': 'gn'})

    def test_state_csv_includes_truncation_end(self):
        grid = build_grid(tadpole_graph(), 0.25, 3.0)
        u = np.linspace(1.0, 2.0, grid.n_dofs)
        lines = _lines(write_state_csv(grid, u, self.out))
        self.assertEqual(lines[0], 'edge,x,value')
        self.assertEqual(len(lines) - 1, sum(e.n_elements + 1 for e in grid.edges))
        self.assertEqual(lines[-1], 'h,3.0,0.0')

    def test_limit_table(self):
        rows = [LimitRow(2.0, 3.5, 0.25, 0.1, 0.01), LimitRow(4.0, 15.5, 0.125, 0.05, 0.001)]
        lines = _lines(write_limit_table(rows, self.out))
        self.assertEqual(lines, ['c,omega,chi_l2,phi_minus_u_h1,nlse_residual',
                                 '2.0,3.5,0.25,0.1,0.01',
                                 '4.0,15.5,0.125,0.05,0.001'])

    def test_empty_limit_table_keeps_header(self):
        self.assertEqual(_lines(write_limit_table([], self.out)), ['c,omega,chi_l2,phi_minus_u_h1,nlse_residual'])

    def test_profile_csv(self):
        lines = _lines(write_profile_csv(np.array([0.0, 0.5]), np.array([1.0, 0.25]), self.out))
        self.assertEqual(lines, ['x,value', '0.0,1.0', '0.5,0.25'])

    def test_dump_matrix_sorted_triplets(self):
        matrix = sps.coo_matrix(([3.0, 1.0, 2.0], ([1, 0, 0], [0, 1, 0])), shape=(2, 2))
        path = os.path.join(self.out, 'm.coo')
        dump_matrix(matrix, path)
        self.assertEqual(_lines(path), ['# 2 2 3', '0 0 2.0', '0 1 1.0', '1 0 3.0'])

    def test_dump_complex_matrix(self):
        path = os.path.join(self.out, 'z.coo')
        dump_matrix(sps.csr_matrix(np.array([[0, 1 + 2j], [1 - 2j, 0]])), path)
        self.assertEqual(_lines(path)[1:], ['0 1 1.0 2.0', '1 0 1.0 -2.0'])

    def test_dump_operators_skips_missing(self):
        ops = assemble_laplacian(build_grid(tadpole_graph(), 0.25, 3.0))
        written = dump_operators(ops, self.out)
        self.assertEqual(sorted(os.path.basename(p) for p in written),
                         ['core_mass.coo', 'mass.coo', 'stiffness.coo'])


class TestRunConfig(unittest.TestCase):

    def setUp(self):
        self.out = tempfile.mkdtemp(prefix='gratwave-')

    def tearDown(self):
        shutil.rmtree(self.out, ignore_errors=True)

    def write_yaml(self, text):
        path = os.path.join(self.out, 'run.yaml')
        with open(path, 'w', encoding='utf-8') as f:
            f.write(text)
        return path

    def test_precedence(self):
        path = self.write_yaml("mass: 2.0\nh: 0.1\nc-schedule: [1, 2]\n")
        cfg = RunConfig.resolve({'mu': 0.5, 'command': 'ground-state'}, path)
        self.assertEqual(cfg.mu, 0.5)
        self.assertEqual(cfg.h, 0.1)
        self.assertEqual(cfg.c_schedule, [1, 2])
        self.assertEqual(cfg.tol, RunConfig().tol)

    def test_unknown_key(self):
        with self.assertRaises(ParameterError):
            RunConfig.resolve({}, self.write_yaml("massive: 1\n"))

    def test_top_level_must_be_mapping(self):
        with self.assertRaises(ParameterError):
            RunConfig.resolve({}, self.write_yaml("- 1\n- 2\n"))

    def test_invalid_yaml(self):
        with self.assertRaises(ParameterError):
            RunConfig.load_yaml(self.write_yaml("a: [1, 2\n"))


class TestConfigValidator(unittest.TestCase):

    def setUp(self):
        self.validator = ConfigValidator()

    def check(self, **overrides):
        values = {'graph': 'g.graph'}
        values.update(overrides)
        return self.validator.validate(RunConfig(**values))

    def test_string_numbers_from_yaml(self):
        # YAML 里加引号的数字是字符串
        for overrides in ({'p': '4'}, {'alpha': '0.5'}, {'command': 'ground-state', 'mu': '1'},
                          {'command': 'bound-state', 'omega': '0.5'}, {'command': 'nonrel-limit', 'lam': '-1'}):
            with self.subTest(overrides=overrides):
                with self.assertRaises(ParameterError) as ctx:
                    self.check(**overrides)
                self.assertEqual(ctx.exception.exit_code, 2)

    def test_accepts_defaults(self):
        self.assertEqual(self.check().command, 'classify')

    def test_rejections(self):
        cases = [
            {'h': 0.0},
            {'p': 2.0},
            {'p': 6.5},
            {'command': 'ground-state'},
            {'command': 'ground-state', 'mu': -1.0},
            {'command': 'gn', 'variant': 'other'},
            {'command': 'bound-state', 'omega': 1.0},
            {'command': 'bound-state', 'omega': 0.5, 'p': 6.0},
            {'command': 'nonrel-limit', 'lam': 0.0},
            {'command': 'nonrel-limit', 'lam': -1.0, 'c_schedule': [2.0, 2.0]},
            {'command': 'unknown'},
            {'graph': None},
        ]
        for overrides in cases:
            with self.subTest(overrides=overrides):
                with self.assertRaises(ParameterError):
                    self.check(**overrides)

    def test_frequency_inside_gap(self):
        cfg = self.check(command='bound-state', omega=3.0, c=2.0)
        self.assertEqual(cfg.omega, 3.0)


class TestSweep(unittest.TestCase):

    def test_concurrency_from_environment(self):
        with mock.patch.dict(os.environ, {'GRATWAVE_THREADS': '3'}):
            self.assertEqual(sweep_concurrency(), 3)
        with mock.patch.dict(os.environ, {'GRATWAVE_THREADS': 'zero'}):
            with self.assertRaises(ParameterError):
                sweep_concurrency()

    def test_order_and_failures(self):
        configs = [RunConfig(graph='g', mu=float(k)) for k in range(5)]

        def runner(cfg):
            if cfg.mu == 3.0:
                raise SolverFailure("stalled")
            return {'mu': cfg.mu}

        results = asyncio.run(run_sweep(configs, runner, limit=2))
        self.assertEqual([r['index'] for r in results], list(range(5)))
        self.assertEqual([r['exit_code'] for r in results], [0, 0, 0, 4, 0])
        self.assertEqual(results[1]['document'], {'mu': 1.0})
        self.assertEqual(results[3]['error']['kind'], 'non-convergence')
        self.assertEqual(results[3]['config']['mu'], 3.0)


if __name__ == '__main__':
    unittest.main()
