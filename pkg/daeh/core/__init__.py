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

"""Core definitions: numeric parameters, the error hierarchy, worker pools

Everything the numerical kernel (expressions, problems, the constraint
manifold) depends on lives here. Analysis modules outside of daeh.core read
their tolerances from the same parameter objects.
"""

from __future__ import absolute_import, division, print_function

import logging
import os

from concurrent.futures import ThreadPoolExecutor

log = logging.getLogger(__name__)


class DaehError(Exception):
    """Base class for all daeh errors

    Every error has a stable ``kind`` (the class name) and an exit code.
    Structured details are kept as keyword attributes so that reports can
    carry them verbatim.
    """

    SUBCLS_BY_KIND = {}
    EXIT_CODE = 1
    kind = 'DaehError'

    @classmethod
    def _register_subcls(cls, subcls):
        subcls.kind = subcls.__name__
        DaehError.SUBCLS_BY_KIND[subcls.kind] = subcls
        return subcls

    def __init__(self, msg, **details):
        super(DaehError, self).__init__(msg)
        self.details = details

    def __getattr__(self, name):
        try:
            return self.__dict__['details'][name]
        except KeyError:
            raise AttributeError(name)

    def to_dict(self):
        return {'kind': self.kind,
                'message': str(self),
                'details': self.details}

    @classmethod
    def from_dict(cls, d):
        """Rebuild an error from its report form"""
        subcls = DaehError.SUBCLS_BY_KIND.get(d['kind'], DaehError)
        return subcls(d['message'], **d.get('details', {}))


class PreconditionError(DaehError):
    """A hypothesis of the requested analysis does not hold (exit code 2)"""
    EXIT_CODE = 2


class NumericalError(DaehError):
    """A numerical procedure failed on valid input (exit code 1)"""
    EXIT_CODE = 1


@DaehError._register_subcls
class UsageError(PreconditionError):
    pass


@DaehError._register_subcls
class ExprSyntaxError(PreconditionError):
    """Malformed expression text; details carry the byte offset"""


@DaehError._register_subcls
class UnknownFunctionError(ExprSyntaxError):
    pass


@DaehError._register_subcls
class MissingBindingError(PreconditionError):
    pass


@DaehError._register_subcls
class EvalDomainError(NumericalError):
    """ln of a nonpositive number, sqrt of a negative one, division by zero"""


@DaehError._register_subcls
class ProblemFormatError(PreconditionError):
    pass


@DaehError._register_subcls
class UnknownProblemError(PreconditionError):
    pass


@DaehError._register_subcls
class InvalidProblemError(PreconditionError):
    """Periodicity, nonzero mean or positivity hypotheses fail"""


@DaehError._register_subcls
class OffManifold(PreconditionError):
    """A point handed to the tangent fields does not satisfy g = 0"""


@DaehError._register_subcls
class NoConvergence(NumericalError):
    pass


@DaehError._register_subcls
class SingularBlock(NumericalError):
    pass


@DaehError._register_subcls
class LeftDomain(NumericalError):
    pass


@DaehError._register_subcls
class BlowUp(NumericalError):
    pass


@DaehError._register_subcls
class StiffFailure(NumericalError):
    pass


@DaehError._register_subcls
class DegenerateUnsupportedDim(PreconditionError):
    pass


@DaehError._register_subcls
class AmbiguousWinding(NumericalError):
    pass


@DaehError._register_subcls
class BoundaryZero(PreconditionError):
    pass


@DaehError._register_subcls
class UnresolvedDegree(PreconditionError):
    pass


@DaehError._register_subcls
class DegenerateTangentZero(NumericalError):
    pass


@DaehError._register_subcls
class MeanNotOne(PreconditionError):
    pass


@DaehError._register_subcls
class ResonantOrigin(PreconditionError):
    pass


@DaehError._register_subcls
class StepFailure(NumericalError):
    pass


@DaehError._register_subcls
class DegreeMatch(PreconditionError):
    pass


@DaehError._register_subcls
class InsufficientOrbits(NumericalError):
    pass


@DaehError._register_subcls
class SingularShootingJacobian(NumericalError):
    pass


@DaehError._register_subcls
class SingularSystem(NumericalError):
    """A dense linear solve met an exactly singular matrix"""


@DaehError._register_subcls
class RankDeficientA22(PreconditionError):
    pass


@DaehError._register_subcls
class KernelMismatch(PreconditionError):
    pass


@DaehError._register_subcls
class RankGapError(PreconditionError):
    pass


class CoreParams(object):
    """Numerical tolerances and limits of a given configuration"""
    NAME = None

    # constraint manifold
    CONSTRAINT_TOL = 1e-10
    CONSTRAINT_SOLVE_TOL = 1e-12
    CONSTRAINT_MAXITER = 50
    SINGULAR_TOL = 1e-12
    TANGENCY_TOL = 1e-8

    # problem validation
    PERIODICITY_TOL = 1e-9
    PERIODICITY_SAMPLES = 64
    BOX_CAP = 10.0

    # integration
    RTOL = 1e-10
    ATOL = 1e-12
    QUAD_TOL = 1e-10
    TRAJECTORY_G_TOL = 1e-8
    ESCAPE_BOUND = 1e6
    SAMPLES = 65
    FD_STEP = 1e-6

    # zeros and degree
    GRID_PER_DIM = 16
    ZERO_NEWTON_TOL = 1e-12
    ZERO_NEWTON_MAXITER = 200
    ZERO_DEDUP_RADIUS = 1e-6
    DEGEN_TOL = 1e-8
    BOUNDARY_TOL = 1e-6
    BOUNDARY_SAMPLES = 16
    WINDING_RADIUS = 1e-3
    WINDING_POINTS = 1024
    WINDING_INTEGER_TOL = 1e-3

    # resonance
    RES_TOL = 1e-7
    MARGINAL_TOL = 1e-4
    MEAN_ONE_TOL = 1e-8

    # shooting and continuation
    SHOOT_TOL = 1e-9
    # largest Newton step still allowed at an accepted x0, relative to 1 + max|x0|
    SHOOT_STEP_TOL = 1e-7
    SHOOT_MAXITER = 30
    SHOOT_COND_LIMIT = 1e12
    DS0 = 0.01
    DS_MIN = 1e-6
    DS_MAX = 0.25
    MAX_STEPS = 2000
    FOLD_REVERSALS = 10
    TRIVIAL_LAMBDA = 1e-6
    TRIVIAL_RADIUS = 1e-4
    ORBIT_DISTINCT_TOL = 1e-4
    BACKOFF_RETRIES = 6

    # svd reduction
    RANK_TOL = 1e-10
    KERNEL_ANGLE_TOL = 1e-8
    KERNEL_SAMPLES = 16
    COUPLING_SAMPLES = 64


class CoreDefaultParams(CoreParams):
    NAME = 'default'


class CoreFastParams(CoreDefaultParams):
    """Looser integration for smoke runs; shooting tolerance follows"""
    NAME = 'fast'
    RTOL = 1e-8
    ATOL = 1e-10
    SHOOT_TOL = 1e-7
    SHOOT_STEP_TOL = 1e-5
    GRID_PER_DIM = 8


"""Master global setting for what core params we're using"""
coreparams = CoreDefaultParams()


def _SelectCoreParams(name):
    """Select the core params to use

    Unless you know what you're doing, you should use daeh.SelectParams()
    instead.
    """
    global coreparams
    if name == 'default':
        coreparams = CoreDefaultParams()
    elif name == 'fast':
        coreparams = CoreFastParams()
    else:
        raise ValueError('Unknown params %r' % name)


def get_params(params=None):
    """Return params, or the currently selected core params"""
    if params is None:
        return coreparams
    return params


def worker_count():
    """Number of worker threads, capped by DAEH_THREADS (default 1)"""
    raw = os.environ.get('DAEH_THREADS', '1')
    try:
        n = int(raw)
    except ValueError:
        log.warning('ignoring non-integer DAEH_THREADS=%r', raw)
        return 1
    return max(1, n)


def parallel_map(fn, items):
    """Map fn over items, results in input order

    Runs on a thread pool when DAEH_THREADS > 1.
    """
    items = list(items)
    n = min(worker_count(), len(items))
    if n <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


__all__ = (
    'DaehError',
    'PreconditionError',
    'NumericalError',
    'UsageError',
    'ExprSyntaxError',
    'UnknownFunctionError',
    'MissingBindingError',
    'EvalDomainError',
    'ProblemFormatError',
    'UnknownProblemError',
    'InvalidProblemError',
    'OffManifold',
    'NoConvergence',
    'SingularBlock',
    'LeftDomain',
    'BlowUp',
    'StiffFailure',
    'DegenerateUnsupportedDim',
    'AmbiguousWinding',
    'BoundaryZero',
    'UnresolvedDegree',
    'DegenerateTangentZero',
    'MeanNotOne',
    'ResonantOrigin',
    'StepFailure',
    'DegreeMatch',
    'InsufficientOrbits',
    'SingularShootingJacobian',
    'SingularSystem',
    'RankDeficientA22',
    'KernelMismatch',
    'RankGapError',
    'CoreParams',
    'CoreDefaultParams',
    'CoreFastParams',
    'get_params',
    'worker_count',
    'parallel_map',
)
