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

from daeh.core.serialize import *


class Point(ImmutableRecord):
    __slots__ = ['x', 'y']

    def __init__(self, x, y):
        self._set(x=x, y=y)


class Test_ImmutableRecord(unittest.TestCase):
    def test_immutable(self):
        p = Point(1.0, 2.0)
        with self.assertRaises(AttributeError):
            p.x = 3.0
        with self.assertRaises(AttributeError):
            del p.y

    def test_equality(self):
        self.assertEqual(Point(1.0, 2.0), Point(1.0, 2.0))
        self.assertNotEqual(Point(1.0, 2.0), Point(1.0, 2.5))
        self.assertEqual(Point(1.0, 2.0).to_dict(), {'x': 1.0, 'y': 2.0})

    def test_repr(self):
        self.assertEqual(repr(Point(1, 2)), 'Point(x=1, y=2)')


class Test_dumps(unittest.TestCase):
    def test(self):
        def T(obj, expected):
            self.assertEqual(dumps(obj), expected)
        T(None, 'null')
        T(True, 'true')
        T(np.bool_(False), 'false')
        T(3, '3')
        T(0.1, '1.000000000000e-01')
        T(-2.0, '-2.000000000000e+00')
        T(np.float64(1e-300), '1.000000000000e-300')
        T(math.inf, '"inf"')
        T(-math.inf, '"-inf"')
        T(math.nan, '"nan"')
        T(1 + 2j, '{"re": 1.000000000000e+00, "im": 2.000000000000e+00}')
        T('a"b', '"a\\"b"')
        T([1, [2.0]], '[1, [2.000000000000e+00]]')
        T(np.array([[1.0, 0.0]]), '[[1.000000000000e+00, 0.000000000000e+00]]')
        T(Point(1, 2), '{"x": 1, "y": 2}')

    def test_key_order_is_insertion_order(self):
        d = {}
        d['b'] = 1
        d['a'] = 2
        self.assertEqual(dumps(d), '{"b": 1, "a": 2}')

    def test_non_string_key(self):
        with self.assertRaises(SerializationError):
            dumps({1: 2})

    def test_unserializable(self):
        with self.assertRaises(SerializationError):
            dumps(object())

    def test_loads(self):
        d = loads(dumps({'schema_version': SCHEMA_VERSION, 'x': [0.5, math.inf]}))
        self.assertEqual(d, {'schema_version': 1, 'x': [0.5, 'inf']})


class Test_write_csv(unittest.TestCase):
    def test(self):
        fd = io.StringIO()
        write_csv(fd, ['step', 'lambda', 'ok', 'note'], [[0, 0.25, True, 'x'],
                                                         [1, np.float64(0.5), False, 'y']])
        self.assertEqual(fd.getvalue(),
                         'step,lambda,ok,note\n'
                         '0,2.500000000000e-01,true,x\n'
                         '1,5.000000000000e-01,false,y\n')


if __name__ == '__main__':
    unittest.main()
