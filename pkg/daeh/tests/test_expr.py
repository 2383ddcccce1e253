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

import json
import math
import os
import random
import unittest

from daeh.core import (ExprSyntaxError, UnknownFunctionError, MissingBindingError,
                       EvalDomainError)
from daeh.core.expr import *


def load_test_vectors(name):
    with open(os.path.dirname(__file__) + '/data/' + name, 'r') as fd:
        for testcase in json.load(fd):
            yield testcase


class Test_parse(unittest.TestCase):
    def test_free_vars(self):
        def T(source, expected):
            self.assertEqual(parse(source).free_vars, frozenset(expected))
        T('y^5+y^3+y+x^3', ('x', 'y'))
        T('x', ('x',))
        T('abs(cos(t))/(2+sin(t))', ('t',))
        T('3.5', ())

    def test_variable_node(self):
        e = parse('x')
        self.assertIsInstance(e.root, Var)
        self.assertEqual(e.root.name, 'x')

    def test_printer_reparses(self):
        for source in ('y^5+y^3+y+x^3', '-x^2', '2^-x', '(a-b)-c', 'a-(b-c)',
                       'a/(b*c)', '(x^2)^3', 'exp(-k4*x1/x2)', 'abs(cos(t))/(2+sin(t))'):
            e = parse(source)
            self.assertEqual(parse(str(e)), e, source)

    def test_invalid(self):
        for source, offset in load_test_vectors('expr_invalid.json'):
            with self.assertRaises(ExprSyntaxError) as cm:
                parse(source)
            self.assertEqual(cm.exception.offset, offset, repr(source))

    def test_overflowing_literal(self):
        with self.assertRaises(ExprSyntaxError) as cm:
            parse('1e999 - x')
        self.assertEqual(cm.exception.expected, 'a finite number')
        self.assertEqual(parse(str(parse('1e308'))), parse('1e308'))

    def test_unknown_function(self):
        with self.assertRaises(UnknownFunctionError) as cm:
            parse('foo(x)')
        self.assertEqual(cm.exception.offset, 0)
        self.assertIn('sin', cm.exception.expected)
        self.assertEqual(cm.exception.kind, 'UnknownFunctionError')

    def test_immutable(self):
        e = parse('x+1')
        with self.assertRaises(AttributeError):
            e.root = None


class Test_eval(unittest.TestCase):
    def test_vectors(self):
        for source, bindings, expected in load_test_vectors('expr_eval.json'):
            self.assertAlmostEqual(evaluate(source, bindings), expected, places=12,
                                   msg=source)

    def test_domain_errors(self):
        for source, bindings in load_test_vectors('expr_domain.json'):
            with self.assertRaises(EvalDomainError, msg=source):
                evaluate(source, bindings)

    def test_missing_binding(self):
        with self.assertRaises(MissingBindingError) as cm:
            evaluate('x*y', {'x': 1.0})
        self.assertEqual(cm.exception.missing, ['y'])

    def test_substitute(self):
        e = parse('x*y').substitute({'y': parse('2+t'), 'x': 3.0})
        self.assertEqual(e.free_vars, frozenset(['t']))
        self.assertEqual(e.eval({'t': 1.0}), 9.0)


class Test_eval_dual(unittest.TestCase):
    def test_examples(self):
        d = eval_dual('y^5+y^3+y+x^3', {'x': 0.0, 'y': 0.0}, ['y'])
        self.assertEqual(d.value, 0.0)
        self.assertEqual(d.partials['y'], 1.0)

        d = eval_dual('x*y', {'x': 2.0, 'y': 3.0}, ['x', 'y'])
        self.assertEqual(d.partials, {'x': 3.0, 'y': 2.0})

        d = eval_dual('exp(-x/y)', {'x': 1.0, 'y': 1.0}, ['x'])
        self.assertAlmostEqual(d.partials['x'], -math.exp(-1.0), places=14)

    def test_abs_at_zero(self):
        d = eval_dual('abs(x)', {'x': 0.0}, ['x'])
        self.assertEqual(d.partials['x'], 0.0)

    def test_unseeded_partials_are_zero(self):
        d = eval_dual('x*y', {'x': 2.0, 'y': 3.0}, ['x', 'z'])
        self.assertEqual(d.partials, {'x': 3.0, 'z': 0.0})

    def test_against_finite_differences(self):
        sources = ('y^5+y^3+y+x^3',
                   'x*y^2 - x^2*y',
                   'y - 0.5*exp(-x/y)',
                   'sin(x)*cos(y) + sqrt(x^2 + y^2 + 1)',
                   'ln(1 + x^2)/(2 + sin(y))',
                   '(1 + x^2)^(0.5*y)')
        rng = random.Random(0)
        h = 1e-6
        for source in sources:
            e = parse(source)
            for _ in range(80):
                x = rng.uniform(0.2, 2.0)
                y = rng.uniform(0.2, 2.0)
                d = e.eval_dual({'x': x, 'y': y}, ['x', 'y'])
                fx = (e.eval({'x': x + h, 'y': y}) - e.eval({'x': x - h, 'y': y})) / (2 * h)
                fy = (e.eval({'x': x, 'y': y + h}) - e.eval({'x': x, 'y': y - h})) / (2 * h)
                for ad, fd in ((d.partials['x'], fx), (d.partials['y'], fy)):
                    self.assertLessEqual(abs(ad - fd), 1e-5 * max(1.0, abs(fd)), source)

    def test_symbolic_derivative_agrees(self):
        e = parse('y - 0.5*exp(-x/y)')
        for x, y in ((1.0, 1.0), (0.3, 2.0), (2.5, 0.7)):
            env = {'x': x, 'y': y}
            d = e.eval_dual(env, ['x', 'y'])
            self.assertAlmostEqual(e.derivative('x').eval(env), d.partials['x'], places=12)
            self.assertAlmostEqual(e.derivative('y').eval(env), d.partials['y'], places=12)


class Test_linear_combination(unittest.TestCase):
    def test(self):
        e = linear_combination([2.0, 0.0, -1.0], [parse('x'), parse('y'), parse('z')])
        self.assertEqual(e.free_vars, frozenset(['x', 'z']))
        self.assertEqual(e.eval({'x': 1.0, 'z': 3.0}), -1.0)
        self.assertEqual(linear_combination([0.0], [parse('x')]).eval({}), 0.0)


if __name__ == '__main__':
    unittest.main()
