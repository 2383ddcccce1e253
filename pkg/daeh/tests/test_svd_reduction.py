# Copyright (C) 2026 The python-daehlib developers
#
# This file is part of python-daehlib.
#
# It is subject to the license terms in the LICENSE file found in the top-level
# directory of this distribution.
#
# No part of python-daehlib, including this file, may be copied, modified,
# propagated, or distributed except according to the terms contained in the
# LICENSE file.

from __future__ import absolute_import, division, print_function, unicode_literals

import unittest

import numpy as np
import scipy.stats

from daeh.core import (KernelMismatch, ProblemFormatError, RankDeficientA22,
                       RankGapError, UsageError)
from daeh.core.expr import Expr, parse
from daeh.core.manifold import manifold_point
from daeh.degree import find_zeros
from daeh.flow import integrate
from daeh.svd_reduction import *

SMALL = """
name = small

[E]
1 0 0
0 1 0
0 0 0

[A]
-1 0 0
0 -1 0
0 0 1

[C]
1; 0; 0
0; 1 + 0.5*cos(2*pi*t); 0
0; 0; 0

[S]
s1 = sin(x1)
s2 = x2
s3 = x3^2

[a]
a = 1 + 0.5*sin(2*pi*t)

[period]
T = 1
"""


def constant_dae(E, A, C=None):
    """E x' = A x + lambda C x with constant C (default E) and a = 1"""
    E = np.asarray(E, dtype=float)
    C = E if C is None else np.asarray(C, dtype=float)
    n = E.shape[0]
    grid = [[Expr.const(float(C[i, j])) for j in range(n)] for i in range(n)]
    S = [Expr.var('x%d' % (i + 1)) for i in range(n)]
    return ImplicitLinearDae(E, A, grid, S, parse('1'), 1.0)


def symmetric_dae(seed=11):
    """Rank 3 of 5 with E symmetric and A near -2 I, so the reduced flow decays"""
    rng = np.random.default_rng(seed)
    U = scipy.stats.ortho_group.rvs(5, random_state=rng)
    E = U.dot(np.diag([2.0, 1.5, 1.0, 0.0, 0.0])).dot(U.T)
    A = -2.0 * np.eye(5) + 0.3 * rng.standard_normal((5, 5))
    mod = parse('1 + 0.5*cos(2*pi*t)').substitute({'pi': np.pi})
    C = [[mod * float(E[i, j]) for j in range(5)] for i in range(5)]
    S = [Expr.call('sin', Expr.var('x%d' % (i + 1))) for i in range(5)]
    a = parse('1 + 0.5*sin(2*pi*t)').substitute({'pi': np.pi})
    return ImplicitLinearDae(E, A, C, S, a, 1.0, name='symmetric')


class Test_svd(unittest.TestCase):
    def test(self):
        def T(E, expected_sigma):
            E = np.asarray(E, dtype=float)
            P, sigma, Q = svd(E)
            np.testing.assert_allclose(sigma, expected_sigma, atol=1e-14)
            np.testing.assert_allclose(P.dot(E).dot(Q.T), np.diag(sigma), atol=1e-14)
            np.testing.assert_allclose(P.dot(P.T), np.eye(len(E)), atol=1e-14)
            np.testing.assert_allclose(Q.dot(Q.T), np.eye(len(E)), atol=1e-14)
        T([[2.0, 0.0], [0.0, 0.0]], [2.0, 0.0])
        T([[0.0, 1.0], [0.0, 0.0]], [1.0, 0.0])
        T([[0.0, 0.0], [0.0, 3.0]], [3.0, 0.0])

    def test_rank_three_of_five(self):
        E = demo_dae().E
        _, sigma, _ = svd(E)
        self.assertTrue(np.all(sigma[:3] > 1e-8))
        self.assertTrue(np.all(sigma[3:] <= 1e-12 * sigma[0]))
        self.assertEqual(numerical_rank(sigma, 1e-10), 3)


class Test_numerical_rank(unittest.TestCase):
    def test(self):
        self.assertEqual(numerical_rank([2.0, 1.0, 0.0], 1e-10), 2)
        self.assertEqual(numerical_rank([0.0, 0.0], 1e-10), 0)
        self.assertEqual(numerical_rank([1.0, 1e-15], 1e-10), 1)

    def test_gap(self):
        with self.assertRaises(RankGapError):
            numerical_rank([1.0, 1e-10], 1e-10)
        with self.assertRaises(RankGapError):
            numerical_rank([1.0, 1e-9], 1e-10)


class Test_ImplicitLinearDae(unittest.TestCase):
    def test_regular_E_is_rejected(self):
        with self.assertRaises(UsageError):
            constant_dae(np.eye(2), np.eye(2))
        with self.assertRaises(UsageError):
            constant_dae(np.zeros((2, 2)), np.eye(2))

    def test_kernel_mismatch(self):
        with self.assertRaises(KernelMismatch):
            constant_dae(np.diag([1.0, 1.0, 0.0]), np.eye(3), C=np.eye(3))

    def test_parse(self):
        dae = parse_implicit_dae(SMALL)
        self.assertEqual(dae.name, 'small')
        self.assertEqual((dae.n, dae.rank), (3, 2))
        np.testing.assert_allclose(dae.C_at(0.25), np.diag([1.0, 1.0, 0.0]), atol=1e-15)
        with self.assertRaises(ProblemFormatError):
            parse_implicit_dae(SMALL.replace('[S]', '[Q]'))
        with self.assertRaises(ProblemFormatError):
            parse_implicit_dae(SMALL.replace('-1 0 0', '-1 zero 0'))
        with self.assertRaises(UsageError):
            parse_implicit_dae(SMALL.replace('s2 = x2', 's2 = x4'))


class Test_reduce(unittest.TestCase):
    def test_diagonal(self):
        red = reduce(constant_dae(np.diag([1.0, 1.0, 0.0]), np.eye(3)))
        prob = red.reduced
        self.assertEqual((prob.k, prob.s), (2, 1))
        self.assertEqual(red.rank, 2)
        _, d1g, d2g = prob.g_blocks(np.zeros(3))
        self.assertAlmostEqual(abs(d2g[0, 0]), 1.0, places=14)
        self.assertLessEqual(np.max(np.abs(d1g)), 1e-15)

    def test_singular_A22(self):
        dae = constant_dae(np.diag([1.0, 1.0, 0.0]), np.diag([1.0, 1.0, 0.0]))
        with self.assertRaises(RankDeficientA22) as cm:
            reduce(dae)
        self.assertEqual(cm.exception.rank, 0)
        self.assertEqual(a22_rank_invariance_check(dae).ranks, (0,) * 5)

    def test_coupling_not_block_diagonal(self):
        C = [[1.0, 0.0, 1.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]]
        dae = constant_dae(np.diag([1.0, 1.0, 0.0]), np.eye(3), C=C)
        with self.assertRaises(KernelMismatch):
            reduce(dae)

    def test_demo(self):
        dae = demo_dae()
        red = reduce(dae)
        self.assertEqual(red.rank, 3)
        self.assertEqual((red.reduced.k, red.reduced.s), (3, 2))
        self.assertLessEqual(red.reconstruction_error, 1e-12)
        self.assertLessEqual(red.orthogonality_error, 1e-12)
        self.assertEqual(red.to_dict()['rank'], 3)

    def test_small(self):
        red = reduce(parse_implicit_dae(SMALL))
        self.assertEqual(red.reduced.name, 'small-reduced')
        self.assertEqual(red.reduced.x_names, ('x1', 'x2'))
        self.assertEqual(red.reduced.y_names, ('y1',))


class Test_a22_rank_invariance_check(unittest.TestCase):
    def test(self):
        rep = a22_rank_invariance_check(demo_dae(), trials=5, seed=3)
        self.assertEqual(len(rep.ranks), 5)
        self.assertEqual(set(rep.ranks), set([2]))
        self.assertTrue(rep.invariant)
        self.assertEqual(len(rep.reconstruction_errors), 5)
        self.assertLessEqual(max(rep.reconstruction_errors), 1e-12)

        rep = a22_rank_invariance_check(constant_dae(np.diag([1.0, 1.0, 0.0]), np.eye(3)))
        self.assertEqual(rep.ranks, (1,) * 5)

    def test_every_pair_is_reduced(self):
        C = [[1.0, 0.0, 1.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]]
        dae = constant_dae(np.diag([1.0, 1.0, 0.0]), np.eye(3), C=C)
        with self.assertRaises(KernelMismatch):
            a22_rank_invariance_check(dae, trials=2)

    def test_null_block_of_size_two(self):
        dae = constant_dae(np.diag([2.0, 0.0, 0.0]), np.diag([-1.0, 1.0, 3.0]))
        rep = a22_rank_invariance_check(dae, trials=4, seed=5)
        self.assertEqual(rep.ranks, (2,) * 4)
        self.assertLessEqual(max(rep.reconstruction_errors), 1e-12)


class Test_implicit_residual(unittest.TestCase):
    def test_reduced_solution_solves_the_implicit_system(self):
        dae = symmetric_dae()
        red = reduce(dae)
        prob = red.reduced
        start = manifold_point(prob, [0.1, -0.1, 0.05], [0.0, 0.0])
        traj = integrate(prob, 0.1, start, 0.0, 0.5, samples=201)
        self.assertLessEqual(implicit_residual(dae, red, traj), 1e-6)

    def test_needs_uniform_samples(self):
        dae = symmetric_dae()
        red = reduce(dae)
        start = manifold_point(red.reduced, [0.1, 0.0, 0.0], [0.0, 0.0])
        traj = integrate(red.reduced, 0.0, start, 0.0, 0.5, samples=[0.0, 0.1, 0.3, 0.4, 0.5])
        with self.assertRaises(ValueError):
            implicit_residual(dae, red, traj)


class Test_trivial_pairs(unittest.TestCase):
    def test(self):
        dae = symmetric_dae()
        red = reduce(dae)
        zeros = find_zeros(red.reduced, grid_per_dim=2)
        self.assertEqual(len(zeros), 1)
        pairs = trivial_pairs(red, zeros)
        p, residual = pairs[0]
        self.assertLessEqual(np.max(np.abs(p)), 1e-12)
        self.assertLessEqual(residual, 1e-12)
        self.assertLessEqual(np.max(np.abs(dae.A.dot(p))), 1e-12)


if __name__ == '__main__':
    unittest.main()
