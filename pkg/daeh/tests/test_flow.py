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

import io
import math
import unittest

import numpy as np

from daeh.core import BlowUp, LeftDomain, OffManifold
from daeh.core.manifold import manifold_point
from daeh.core.model import PointKS, builtin, parse_problem
from daeh.flow import *

# x' = x^2 on the diagonal y = x; escapes at t = 1 from x(0) = 1
SQUARE = """
name = square

[dims]
k = 1
s = 1

[f]
f1 = x^2

[g]
g1 = y - x

[a]
a = 1

[period]
T = 1
"""


# x' = mu x with the constraint decoupled; P_T(x0) = exp(mu T a_mean) x0
DECOUPLED = """
name = decoupled

[dims]
k = 1
s = 1

[params]
mu = -0.7

[f]
f1 = mu*x

[g]
g1 = y

[a]
a = 1 + 0.5*sin(2*pi*t)

[period]
T = 1
"""


def simpson(values, h):
    """Composite Simpson rule over an even number of uniform steps"""
    w = np.ones(len(values))
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return float(w.dot(values)) * h / 3.0


class Test_flow_identities(unittest.TestCase):
    def test_semigroup(self):
        def T(name, lam, p, drift):
            prob = builtin(name)
            start = manifold_point(prob, p, [0.0])
            t1, t2 = 0.37, 0.9
            whole = integrate(prob, lam, start, 0.0, t2, samples=2, drift=drift).final
            first = integrate(prob, lam, start, 0.0, t1, samples=2, drift=drift).final
            second = integrate(prob, lam, first, t1, t2, samples=2, drift=drift).final
            self.assertLessEqual(np.max(np.abs(whole - second)), 1e-7, name)
        T('reactor', 0.0, [1.0, 1.0], 1.0)
        T('example-4-6', 0.0, [0.9], 1.0)
        T('example-4-6', 0.3, [0.9], None)

    def test_weak_form(self):
        # x(t + d) - x(t) equals the integral of a f + lambda h over [t, t + d]
        def T(name, lam, p):
            prob = builtin(name)
            start = manifold_point(prob, p, [0.0])
            n = 400
            traj = integrate(prob, lam, start, 0.0, prob.T, samples=n + 1)
            h = prob.T / n
            rhs = np.array([prob.eval_a(t) * prob.eval_f(z) + lam * prob.eval_h(t, z)
                            for t, z in zip(traj.times, traj.states)])
            for i in range(0, n, 40):
                span = slice(i, i + 41)
                delta = traj.states[i + 40, :prob.k] - traj.states[i, :prob.k]
                integral = np.array([simpson(rhs[span, j], h) for j in range(prob.k)])
                self.assertLessEqual(np.max(np.abs(delta - integral)), 1e-6, (name, i))
        T('example-4-6', 0.5, [1.0])
        T('reactor', 0.5, [1.0, 1.0])

    def test_reparametrization_on_the_period(self):
        prob = builtin('example-4-6')
        z0 = manifold_point(prob, [0.7], [0.0])
        times = np.linspace(0.0, prob.T, 9)
        traj = integrate(prob, 0.0, z0, 0.0, prob.T, samples=times)
        for t, z in zip(times[1:], traj.states[1:]):
            via = reparametrized(prob, z0, t)
            self.assertLessEqual(np.max(np.abs(z - via)), 1e-6, t)


class Test_integrate(unittest.TestCase):
    def test_equilibrium(self):
        prob = builtin('example-4-6')
        r = math.sqrt(2.0)
        traj = integrate(prob, 0.0, [r, r], 0.0, 1.0, samples=11)
        self.assertEqual(len(traj.times), 11)
        self.assertLessEqual(np.max(np.abs(traj.states - [r, r])), 1e-12)

    def test_stays_on_manifold(self):
        def T(name, lam, p):
            prob = builtin(name)
            start = manifold_point(prob, p, [0.0])
            traj = integrate(prob, lam, start, 0.0, prob.T, samples=101)
            self.assertLessEqual(traj.max_g_residual, 1e-8)
            for z in traj.states:
                self.assertLessEqual(np.max(np.abs(prob.eval_g(z))), 1e-8)
        T('example-4-6', 0.5, [1.0])
        T('example-4-6', 0.0, [-1.2])
        T('reactor', 1.0, [1.0, 1.0])
        T('reactor', 0.3, [2.5, 0.6])
        T('example-3-7', 0.2, [0.3])

    def test_sample_times(self):
        prob = builtin('example-4-6')
        start = manifold_point(prob, [1.0], [0.0])
        traj = integrate(prob, 0.1, start, 0.0, 1.0, samples=[0.0, 0.25, 1.0])
        self.assertEqual(list(traj.times), [0.0, 0.25, 1.0])
        self.assertEqual(traj.states[0].tolist(), start.z.z.tolist())
        t, z = traj.samples[1]
        self.assertEqual(t, 0.25)
        self.assertIsInstance(z, PointKS)

    def test_bad_arguments(self):
        prob = builtin('example-4-6')
        start = manifold_point(prob, [1.0], [0.0])
        with self.assertRaises(ValueError):
            integrate(prob, 0.0, start, 1.0, 1.0)
        with self.assertRaises(ValueError):
            integrate(prob, 0.0, start, 0.0, 1.0, samples=1)
        with self.assertRaises(ValueError):
            integrate(prob, 0.0, start, 0.0, 1.0, samples=[0.0, 0.5, 0.5])
        with self.assertRaises(ValueError):
            integrate(prob, 0.0, start, 0.0, 1.0, samples=[0.0, 2.0])
        with self.assertRaises(OffManifold):
            integrate(prob, 0.0, [1.0, 0.0], 0.0, 1.0)

    def test_blow_up(self):
        prob = parse_problem(SQUARE)
        with self.assertRaises(BlowUp) as cm:
            integrate(prob, 0.0, [1.0, 1.0], 0.0, 2.0)
        self.assertLess(cm.exception.t, 1.0)

    def test_left_domain(self):
        prob = parse_problem(SQUARE + '\n[domain]\nx = -10, 2\n')
        with self.assertRaises(LeftDomain) as cm:
            integrate(prob, 0.0, [1.0, 1.0], 0.0, 1.0)
        self.assertGreater(cm.exception.t, 0.4)

    def test_csv(self):
        prob = builtin('reactor')
        start = manifold_point(prob, [1.0, 1.0], [0.0])
        traj = integrate(prob, 0.5, start, 0.0, 1.0, samples=5)
        fd = io.StringIO()
        write_trajectory_csv(fd, traj)
        lines = fd.getvalue().splitlines()
        self.assertEqual(lines[0], 't,x1,x2,y1,g_residual')
        self.assertEqual(len(lines), 6)
        self.assertTrue(lines[1].startswith('0.000000000000e+00,1.000000000000e+00,'))


class Test_phi_a(unittest.TestCase):
    def test(self):
        prob = builtin('example-4-6')
        self.assertAlmostEqual(phi_a(prob, 1.0), 1.0, delta=1e-10)
        self.assertAlmostEqual(phi_a(prob, 0.25), 0.25 + 0.25 / math.pi, delta=1e-10)
        self.assertEqual(phi_a(prob, 0.0), 0.0)

        prob = builtin('example-3-7')
        self.assertAlmostEqual(phi_a(prob, prob.T), 2 * math.log(3.0), delta=1e-9)


class Test_time_average_check(unittest.TestCase):
    def test_builtins(self):
        rng = np.random.default_rng(8)

        def T(name, lo, hi):
            prob = builtin(name)
            for _ in range(10):
                x0 = [rng.uniform(l, h) for l, h in zip(lo, hi)]
                self.assertLessEqual(time_average_check(prob, x0), 1e-6, (name, x0))
        T('example-4-6', [-1.3], [1.3])
        T('example-3-7', [0.05], [0.5])
        T('reactor', [1.0, 0.5], [3.0, 2.0])

    def test_reparametrized_at_zero_time(self):
        prob = builtin('example-4-6')
        z0 = manifold_point(prob, [0.7], [0.0])
        self.assertEqual(reparametrized(prob, z0, 0.0).tolist(), z0.z.z.tolist())


class Test_poincare_T(unittest.TestCase):
    def test_fixed_point(self):
        prob = builtin('example-4-6')
        r = math.sqrt(2.0)
        rep = poincare_T(prob, 0.0, [r], [r])
        self.assertAlmostEqual(rep.P_T[0], r, delta=1e-10)
        self.assertAlmostEqual(rep.y0[0], r, delta=1e-12)
        # Phi = 1 there and a has mean 1, so M = e
        self.assertAlmostEqual(rep.M_matrix[0, 0], math.e, delta=1e-3)

    def test_decoupled_linear(self):
        def T(mu, x0):
            prob = parse_problem(DECOUPLED, overrides={'mu': mu})
            expected = math.exp(mu * prob.T * prob.a_mean) * x0
            rep = poincare_T(prob, 0.0, [x0], [0.0])
            self.assertAlmostEqual(rep.P_T[0], expected, delta=1e-8 * abs(expected))
            self.assertAlmostEqual(rep.M_matrix[0, 0], expected / x0, delta=1e-5)
        T(-0.7, 0.8)
        T(0.4, -1.3)

    def test_monodromy_step_independence(self):
        prob = builtin('reactor')
        coarse = poincare_T(prob, 0.2, [1.0, 1.0], [0.0], fd_step=1e-5).M_matrix
        fine = poincare_T(prob, 0.2, [1.0, 1.0], [0.0], fd_step=1e-7).M_matrix
        self.assertLessEqual(np.linalg.norm(coarse - fine), 1e-3 * np.linalg.norm(fine))

    def test_time_T_map(self):
        prob = builtin('reactor')
        x, y, y0 = time_T_map(prob, 0.2, [1.0, 1.0], [0.0])
        self.assertAlmostEqual(y0[0], math.exp(-1.0) / 2, delta=1e-12)
        self.assertLessEqual(abs(prob.eval_g(np.concatenate([x, y]))[0]), 1e-8)

    def test_default_q_guess(self):
        self.assertEqual(default_q_guess(builtin('reactor')).tolist(), [0.0])
        prob = parse_problem(SQUARE + '\n[domain]\ny = 1, 3\n')
        self.assertEqual(default_q_guess(prob).tolist(), [2.0])


class Test_floquet_multipliers(unittest.TestCase):
    def test(self):
        mus = floquet_multipliers([[2.0, 0.0], [0.0, -3.0]])
        self.assertEqual(mus, [-3.0, 2.0])
        mus = floquet_multipliers([[0.5]])
        self.assertEqual(mus, [0.5])


if __name__ == '__main__':
    unittest.main()
