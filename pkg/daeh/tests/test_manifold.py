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

import math
import unittest

import numpy as np
import scipy.optimize

from daeh.core import LeftDomain, OffManifold, SingularBlock
from daeh.core.manifold import *
from daeh.core.model import PointKS, builtin, parse_problem

# g = y^2 - x has a fold at y = 0
FOLD = """
name = fold

[dims]
k = 1
s = 1

[f]
f1 = 1

[g]
g1 = y^2 - x

[h]
h1 = 0

[a]
a = 1

[period]
T = 1
"""


def reactor_zero(prob):
    """The reactor equilibrium from its scalar reduction in y"""
    c = prob.constants

    def residual(y):
        x1 = c['C0'] - y / c['k1']
        x2 = (c['k1'] * c['T0'] + c['k3'] * c['Tc'] + c['k2'] * y) / (c['k1'] + c['k3'])
        return y - c['k3'] * math.exp(-c['k4'] * x1 / x2), x1, x2
    y = scipy.optimize.brentq(lambda v: residual(v)[0], 0.0, 0.5, xtol=1e-15)
    _, x1, x2 = residual(y)
    return np.array([x1, x2, y])


class Test_solve_constraint(unittest.TestCase):
    def test_moving_constraint(self):
        prob = builtin('example-3-7')
        q = solve_constraint(prob, [0.0], [0.5])
        self.assertLessEqual(abs(q[0]), 1e-12)

    def test_reactor(self):
        prob = builtin('reactor')
        q = solve_constraint(prob, [1.0, 1.0], [0.0])
        self.assertAlmostEqual(q[0], math.exp(-1.0) / 2, delta=1e-12)

    def test_three_zeros(self):
        prob = builtin('example-4-6')
        q = solve_constraint(prob, [1.0], [0.0])
        expected = scipy.optimize.brentq(lambda y: y - 1.0 + 0.5 * y ** 3, 0.0, 1.0,
                                         xtol=1e-15)
        self.assertAlmostEqual(q[0], expected, delta=1e-12)
        self.assertLessEqual(abs(prob.eval_g([1.0, q[0]])[0]), 1e-12)

    def test_same_root_from_nearby_guesses(self):
        def T(name, p):
            prob = builtin(name)
            root = solve_constraint(prob, p, [0.0])
            for d in np.linspace(-0.1, 0.1, 9):
                q = solve_constraint(prob, p, root + d)
                self.assertAlmostEqual(q[0], root[0], delta=1e-11, msg=(name, d))
        T('example-4-6', [1.0])
        T('example-4-6', [-0.4])
        T('example-3-7', [0.6])
        T('reactor', [2.0, 0.8])

    def test_singular_block(self):
        prob = parse_problem(FOLD)
        with self.assertRaises(SingularBlock):
            solve_constraint(prob, [1.0], [0.0])
        q = solve_constraint(prob, [4.0], [1.0])
        self.assertAlmostEqual(q[0], 2.0, delta=1e-12)

    def test_outside_domain(self):
        prob = builtin('reactor')
        with self.assertRaises(LeftDomain):
            solve_constraint(prob, [1.0, -1.0], [0.0])

    def test_bad_lengths(self):
        prob = builtin('reactor')
        with self.assertRaises(ValueError):
            solve_constraint(prob, [1.0], [0.0])


class Test_ManifoldPoint(unittest.TestCase):
    def test_on(self):
        prob = builtin('example-4-6')
        r = math.sqrt(2.0)
        mp = ManifoldPoint.on(prob, [r, r])
        self.assertEqual(mp.z, PointKS([r], [r]))
        self.assertLessEqual(mp.g_residual, 1e-10)

    def test_off_manifold(self):
        prob = builtin('example-4-6')
        with self.assertRaises(OffManifold) as cm:
            ManifoldPoint.on(prob, [1.0, 0.0])
        self.assertEqual(cm.exception.residual, 1.0)

    def test_manifold_point(self):
        prob = builtin('reactor')
        mp = manifold_point(prob, [1.0, 1.0], [0.3])
        self.assertEqual(list(mp.p), [1.0, 1.0])
        self.assertAlmostEqual(mp.q[0], math.exp(-1.0) / 2, delta=1e-12)


class Test_lift(unittest.TestCase):
    def test_psi_vanishes_at_zeros(self):
        prob = builtin('reactor')
        tv = psi(prob, reactor_zero(prob))
        self.assertLessEqual(np.max(np.abs(tv.array)), 1e-12)

        prob = builtin('example-4-6')
        r = math.sqrt(2.0)
        for z in ([0.0, 0.0], [r, r], [-r, -r]):
            self.assertLessEqual(np.max(np.abs(psi(prob, z).array)), 1e-12)

    def test_upsilon(self):
        prob = builtin('example-4-6')
        r = math.sqrt(2.0)
        tv = upsilon(prob, 0.0, [r, r])
        self.assertAlmostEqual(tv.u[0], 1.0, places=14)
        # v = 3 x^2 u / (1 + 3 eps y^2) = 6 / 4
        self.assertAlmostEqual(tv.v[0], 1.5, places=12)

    def test_tangency(self):
        prob = builtin('reactor')
        rng = np.random.default_rng(6)
        for _ in range(50):
            p = [rng.uniform(0.5, 3), rng.uniform(0.5, 3)]
            mp = manifold_point(prob, p, [0.0])
            _, d1g, d2g = prob.g_blocks(mp.z)
            for t in (0.0, 0.3):
                for tv in (psi(prob, mp), upsilon(prob, t, mp)):
                    self.assertLessEqual(np.max(np.abs(d1g.dot(tv.u) + d2g.dot(tv.v))), 1e-10)
                    self.assertLessEqual(tv.tangency_residual, 1e-10)

    def test_field(self):
        prob = builtin('example-4-6')
        mp = manifold_point(prob, [1.0], [0.0])
        t = 0.25
        expected = prob.eval_a(t) * psi(prob, mp).array + 0.5 * upsilon(prob, t, mp).array
        np.testing.assert_allclose(field(prob, t, mp, 0.5), expected, rtol=1e-13, atol=1e-15)
        np.testing.assert_allclose(field(prob, t, mp, 0.0, drift=2.0),
                                   2.0 * psi(prob, mp).array, rtol=1e-13, atol=1e-15)


class Test_tangent_basis(unittest.TestCase):
    def test(self):
        rng = np.random.default_rng(7)
        for name in ('reactor', 'example-4-6'):
            prob = builtin(name)
            for _ in range(20):
                p = [rng.uniform(0.5, 1.3) for _ in range(prob.k)]
                mp = manifold_point(prob, p, [0.0])
                basis = tangent_basis(prob, mp)
                _, d1g, d2g = prob.g_blocks(mp.z)
                self.assertEqual(basis.shape, (prob.k + prob.s, prob.k))
                self.assertLessEqual(np.max(np.abs(np.hstack([d1g, d2g]).dot(basis))), 1e-12)
                np.testing.assert_allclose(basis.T.dot(basis), np.eye(prob.k), atol=1e-12)
                self.assertGreater(np.linalg.det(basis[:prob.k, :]), 0.0)


if __name__ == '__main__':
    unittest.main()
