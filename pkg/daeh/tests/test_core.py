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

import os
import threading
import unittest

import daeh
import daeh.core
from daeh.core import *


class Test_DaehError(unittest.TestCase):
    def test_kinds_and_exit_codes(self):
        def T(cls, code):
            self.assertEqual(cls.kind, cls.__name__)
            self.assertIs(DaehError.SUBCLS_BY_KIND[cls.kind], cls)
            self.assertEqual(cls('x').EXIT_CODE, code)
        T(UsageError, 2)
        T(ExprSyntaxError, 2)
        T(OffManifold, 2)
        T(ResonantOrigin, 2)
        T(DegreeMatch, 2)
        T(RankDeficientA22, 2)
        T(NoConvergence, 1)
        T(BlowUp, 1)
        T(StiffFailure, 1)
        T(InsufficientOrbits, 1)

    def test_details(self):
        err = NoConvergence('did not converge', residual_history=[1.0, 0.5])
        self.assertEqual(err.residual_history, [1.0, 0.5])
        with self.assertRaises(AttributeError):
            err.nonexistent
        d = err.to_dict()
        self.assertEqual(d['kind'], 'NoConvergence')
        self.assertEqual(d['message'], 'did not converge')

    def test_from_dict(self):
        err = DaehError.from_dict({'kind': 'LeftDomain', 'message': 'out',
                                   'details': {'t': 0.5}})
        self.assertIsInstance(err, LeftDomain)
        self.assertEqual(err.t, 0.5)

        err = DaehError.from_dict({'kind': 'NoSuchKind', 'message': 'x'})
        self.assertIs(type(err), DaehError)

    def test_subclassing(self):
        self.assertTrue(issubclass(UnknownFunctionError, ExprSyntaxError))
        self.assertTrue(issubclass(EvalDomainError, NumericalError))
        self.assertTrue(issubclass(BoundaryZero, PreconditionError))


class Test_SelectParams(unittest.TestCase):
    def tearDown(self):
        daeh.SelectParams('default')

    def test(self):
        daeh.SelectParams('fast')
        self.assertEqual(daeh.params.NAME, 'fast')
        self.assertIs(get_params(), daeh.core.coreparams)
        self.assertEqual(get_params().RTOL, 1e-8)

        daeh.SelectParams('default')
        self.assertEqual(get_params().RTOL, 1e-10)
        self.assertEqual(get_params().SHOOT_TOL, 1e-9)

        with self.assertRaises(ValueError):
            daeh.SelectParams('slow')

    def test_explicit_params_win(self):
        params = CoreFastParams()
        self.assertIs(get_params(params), params)


class Test_parallel_map(unittest.TestCase):
    def setUp(self):
        self.saved = os.environ.get('DAEH_THREADS')

    def tearDown(self):
        if self.saved is None:
            os.environ.pop('DAEH_THREADS', None)
        else:
            os.environ['DAEH_THREADS'] = self.saved

    def test_order_is_kept(self):
        for threads in ('1', '4'):
            os.environ['DAEH_THREADS'] = threads
            self.assertEqual(parallel_map(lambda x: x * x, range(20)),
                             [x * x for x in range(20)])

    def test_uses_threads(self):
        os.environ['DAEH_THREADS'] = '3'
        names = set(parallel_map(lambda _: threading.current_thread().name, range(30)))
        self.assertNotIn(threading.current_thread().name, names)

    def test_worker_count(self):
        def T(raw, expected):
            os.environ['DAEH_THREADS'] = raw
            self.assertEqual(worker_count(), expected)
        T('1', 1)
        T('8', 8)
        T('0', 1)
        T('-3', 1)
        T('many', 1)


if __name__ == '__main__':
    unittest.main()
