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

"""Reduction of implicit linear DAEs by singular value decomposition

An implicit system

    E x' = a(t) A x + lambda C(t) S(x),    ker C(t)^T = ker E^T,

with singular E is brought to semi-explicit form with orthogonal P, Q such
that P E Q^T = diag(E_s, 0). In the coordinates (x, y) = Q x_orig the
system reads

    x' = E_s^-1 (a (A11 x + A12 y) + lambda [P C S]_top),
    0  = A21 x + A22 y,

with A_ij the blocks of P A Q^T. The reduced F is (A11 x + A12 y, A21 x + A22 y)
with its first block scaled by E_s^-1, which keeps the zero set and |index|.
"""

from __future__ import absolute_import, division, print_function

import io
import logging
import math
import re

import numpy as np
import scipy.linalg
import scipy.stats

from daeh.core import (get_params, DaehError, KernelMismatch, ProblemFormatError,
                       RankDeficientA22, RankGapError, UsageError)
from daeh.core.expr import Expr, linear_combination, parse
from daeh.core.linalg import is_degenerate
from daeh.core.model import DaeProblem, as_array
from daeh.core.serialize import ImmutableRecord

log = logging.getLogger(__name__)

# singular values within this factor of the rank threshold leave no clear gap
_GAP_FACTOR = 100.0


def _eval_matrix(C, t):
    env = {'t': float(t)}
    return np.array([[e.eval(env) for e in row] for row in C])


class ImplicitLinearDae(ImmutableRecord):
    """E x' = a(t) A x + lambda C(t) S(x)

    C is an n x n grid of Expr in t; S holds n Expr in x1..xn.
    """
    __slots__ = ['E', 'A', 'C', 'S', 'a', 'T', 'rank', 'name']

    def __init__(self, E, A, C, S, a, T, name='implicit', params=None):
        params = get_params(params)
        E = np.array(E, dtype=float)
        A = np.array(A, dtype=float)
        n = E.shape[0]
        if n < 2 or E.shape != (n, n) or A.shape != (n, n):
            raise UsageError('E and A must be square of the same size >= 2')
        C = tuple(tuple(row) for row in C)
        S = tuple(S)
        if len(C) != n or any(len(row) != n for row in C) or len(S) != n:
            raise UsageError('C must be %d x %d and S of length %d' % (n, n, n))
        names = set('x%d' % (i + 1) for i in range(n))
        for e in S:
            if not e.free_vars <= names:
                raise UsageError('S uses unknown variables %s'
                                 % ', '.join(sorted(e.free_vars - names)))
        for row in C:
            for e in row:
                if not e.free_vars <= set(['t']):
                    raise UsageError('C entries may only depend on t')
        _, sigma, _ = svd(E)
        rank = numerical_rank(sigma, params.RANK_TOL)
        if not 0 < rank < n:
            raise UsageError('E must be singular and nonzero; rank %d of %d' % (rank, n),
                             rank=rank)
        self._set(E=E, A=A, C=C, S=S, a=a, T=float(T), rank=rank, name=name)
        self._check_kernels(params)

    @property
    def n(self):
        return self.E.shape[0]

    def C_at(self, t):
        return _eval_matrix(self.C, t)

    def _check_kernels(self, params):
        left = scipy.linalg.null_space(self.E.T, rcond=params.RANK_TOL)
        for t in np.linspace(0.0, self.T, params.KERNEL_SAMPLES, endpoint=False):
            C = self.C_at(t)
            other = scipy.linalg.null_space(C.T, rcond=params.RANK_TOL)
            if other.shape[1] != left.shape[1]:
                raise KernelMismatch('dim ker C(t)^T = %d differs from dim ker E^T = %d at '
                                     't=%g' % (other.shape[1], left.shape[1], t), t=t)
            angle = float(np.max(scipy.linalg.subspace_angles(left, other)))
            if angle > params.KERNEL_ANGLE_TOL:
                raise KernelMismatch('ker C(t)^T and ker E^T differ by angle %.3e at t=%g'
                                     % (angle, t), t=t, angle=angle)

    def to_dict(self):
        return {'name': self.name, 'n': self.n, 'rank': self.rank,
                'E': self.E, 'A': self.A,
                'C': [[str(e) for e in row] for row in self.C],
                'S': [str(e) for e in self.S], 'a': str(self.a), 'T': self.T}


def svd(E):
    """(P, sigma, Q) with P E Q^T = diag(sigma), sigma descending

    LAPACK gesdd through numpy.
    """
    E = np.asarray(E, dtype=float)
    U, sigma, Vt = np.linalg.svd(E, full_matrices=True)
    return U.T, sigma, Vt


def numerical_rank(sigma, rank_tol):
    """Number of singular values above rank_tol * sigma_max

    Raises RankGapError when a singular value sits too close to the
    threshold to call.
    """
    sigma = np.asarray(sigma, dtype=float)
    if len(sigma) == 0 or sigma[0] == 0.0:
        return 0
    thr = rank_tol * sigma[0]
    for s in sigma:
        if thr / _GAP_FACTOR < s <= thr * _GAP_FACTOR:
            raise RankGapError('singular value %.3e is within a factor %g of the rank '
                               'threshold %.3e' % (s, _GAP_FACTOR, thr),
                               sigma=sigma.tolist())
    return int(np.sum(sigma > thr))


def _blocks(A, P, Q, r):
    At = P.dot(A).dot(Q.T)
    return At[:r, :r], At[:r, r:], At[r:, :r], At[r:, r:]


class SvdReduction(ImmutableRecord):
    """Orthogonal factors, blocks and the reduced semi-explicit problem"""
    __slots__ = ['P', 'sigma', 'Q', 'rank', 'E_s', 'A11', 'A12', 'A21', 'A22',
                 'reduced', 'reconstruction_error', 'orthogonality_error']

    def __init__(self, **fields):
        self._set(**fields)

    def original_state(self, z):
        """x_orig = Q^T (x; y)"""
        return self.Q.T.dot(as_array(z))

    def to_dict(self):
        return {'rank': self.rank,
                'sigma': self.sigma,
                'P': self.P,
                'Q': self.Q,
                'A22': self.A22,
                'reconstruction_error': self.reconstruction_error,
                'orthogonality_error': self.orthogonality_error,
                'reduced': self.reduced,
                'note': 'f carries the factor E_s^-1; zero set and |index| of F are '
                        'unchanged by it'}


def _substituted_S(dae, Q):
    """S(Q^T w) as Expr in the reduced variables"""
    n = dae.n
    r = dae.rank
    w_names = ['x%d' % (i + 1) for i in range(r)] + ['y%d' % (i + 1) for i in range(n - r)]
    w = [Expr.var(name) for name in w_names]
    mapping = dict(('x%d' % (l + 1), linear_combination(Q[:, l], w)) for l in range(n))
    return [e.substitute(mapping) for e in dae.S], w, w_names


def _is_zero(e):
    return e.is_constant() and e.eval({}) == 0.0


def reduce(dae, rank_tol=None, P=None, Q=None, params=None):
    """Semi-explicit DaeProblem of an implicit linear DAE

    P and Q may be given to use another valid SVD pair.
    """
    params = get_params(params)
    rank_tol = params.RANK_TOL if rank_tol is None else rank_tol
    P0, sigma, Q0 = svd(dae.E)
    r = numerical_rank(sigma, rank_tol)
    P = P0 if P is None else np.asarray(P, dtype=float)
    Q = Q0 if Q is None else np.asarray(Q, dtype=float)
    n = dae.n
    PEQ = P.dot(dae.E).dot(Q.T)
    E_s = np.diag(np.diag(PEQ)[:r])
    target = np.zeros((n, n))
    target[:r, :r] = E_s
    recon = float(np.linalg.norm(PEQ - target) / np.linalg.norm(dae.E))
    ortho = float(max(np.max(np.abs(P.T.dot(P) - np.eye(n))),
                      np.max(np.abs(Q.T.dot(Q) - np.eye(n)))))

    A11, A12, A21, A22 = _blocks(dae.A, P, Q, r)
    if is_degenerate(A22, 1e-10):
        rank = int(np.linalg.matrix_rank(A22))
        raise RankDeficientA22('A22 is singular (rank %d of %d)' % (rank, n - r),
                               rank=rank, reconstruction_error=recon)

    cnorm = max(np.linalg.norm(dae.C_at(t)) for t in
                np.linspace(0.0, dae.T, params.COUPLING_SAMPLES, endpoint=False))
    for t in np.linspace(0.0, dae.T, params.COUPLING_SAMPLES, endpoint=False):
        PCQ = P.dot(dae.C_at(t)).dot(Q.T)
        off = max(np.max(np.abs(PCQ[r:, :])), np.max(np.abs(PCQ[:r, r:])))
        if off > 1e-8 * max(cnorm, 1.0):
            raise KernelMismatch('P C(t) Q^T has off-diagonal blocks of size %.3e at t=%g'
                                 % (off, t), t=t)
        if is_degenerate(PCQ[:r, :r], 1e-10):
            raise KernelMismatch('coupling block is singular at t=%g' % t, t=t)

    E_inv = np.diag(1.0 / np.diag(E_s))
    S_red, w, w_names = _substituted_S(dae, Q)
    f = [linear_combination(E_inv[i, i] * np.concatenate([A11[i], A12[i]]), w)
         for i in range(r)]
    g = [linear_combination(np.concatenate([A21[i], A22[i]]), w) for i in range(n - r)]
    # u_j = sum_l C_jl(t) S_l(Q^T w)
    u = []
    for j in range(n):
        terms = [dae.C[j][l] * S_red[l] for l in range(n) if not _is_zero(dae.C[j][l])]
        total = terms[0] if terms else Expr.const(0.0)
        for term in terms[1:]:
            total = total + term
        u.append(total)
    EP = E_inv.dot(P[:r, :])
    h = [linear_combination(EP[i], u) for i in range(r)]
    reduced = DaeProblem(r, n - r, f, g, h, dae.a, dae.T,
                         x_names=w_names[:r], y_names=w_names[r:],
                         name='%s-reduced' % dae.name, params=params)
    log.info('reduced %s: k=%d s=%d', dae.name, r, n - r)
    return SvdReduction(P=P, sigma=sigma, Q=Q, rank=r, E_s=E_s, A11=A11, A12=A12,
                        A21=A21, A22=A22, reduced=reduced,
                        reconstruction_error=recon, orthogonality_error=ortho)


def _random_orthogonal(m, rng):
    if m == 1:
        return np.array([[1.0 if rng.random() < 0.5 else -1.0]])
    return scipy.stats.ortho_group.rvs(m, random_state=rng)


class RankInvarianceReport(ImmutableRecord):
    __slots__ = ['ranks', 'invariant', 'reconstruction_errors']

    def __init__(self, ranks, reconstruction_errors):
        self._set(ranks=tuple(ranks), invariant=len(set(ranks)) == 1,
                  reconstruction_errors=tuple(reconstruction_errors))

    def to_dict(self):
        return {'ranks': list(self.ranks), 'invariant': self.invariant,
                'reconstruction_errors': list(self.reconstruction_errors)}


def a22_rank_invariance_check(dae, trials=5, seed=0, params=None):
    """rank of A22 over random valid SVD pairs

    Each trial rotates the null singular subspaces by random orthogonal maps
    and flips signs of matching singular vector pairs, which keeps
    P E Q^T = diag(E_s, 0). Every pair goes through reduce, so a pair that
    breaks the block structure of C(t) raises KernelMismatch.
    """
    params = get_params(params)
    P0, sigma, Q0 = svd(dae.E)
    r = numerical_rank(sigma, params.RANK_TOL)
    n = dae.n
    rng = np.random.default_rng(seed)
    ranks = []
    errors = []
    for _ in range(trials):
        signs = np.diag(rng.choice([-1.0, 1.0], size=r))
        left = np.eye(n)
        right = np.eye(n)
        left[:r, :r] = signs
        right[:r, :r] = signs
        left[r:, r:] = _random_orthogonal(n - r, rng)
        right[r:, r:] = _random_orthogonal(n - r, rng)
        P = left.dot(P0)
        Q = right.dot(Q0)
        try:
            reduction = reduce(dae, P=P, Q=Q, params=params)
        except RankDeficientA22 as err:
            ranks.append(err.rank)
            errors.append(err.reconstruction_error)
            continue
        ranks.append(n - r)
        errors.append(reduction.reconstruction_error)
    log.debug('A22 ranks over %d SVD pairs: %s', trials, ranks)
    return RankInvarianceReport(ranks, errors)


def trivial_pairs(reduction, zeros):
    """Original-space vectors p = Q^T z of reduced zeros, with max|A p|

    Zeros of the reduced F are exactly the kernel of A in these coordinates.
    Since P is orthogonal, |A p| is measured as |P A Q^T z|.
    """
    At = np.block([[reduction.A11, reduction.A12], [reduction.A21, reduction.A22]])
    out = []
    for zero in zeros:
        z = as_array(zero)
        out.append((reduction.original_state(z), float(np.max(np.abs(At.dot(z))))))
    return out


def implicit_residual(dae, reduction, traj):
    """max |E x' - a A x - lambda C S(x)| in original coordinates

    x' comes from fourth-order central differences of the sampled trajectory,
    so only interior samples (two away from each end) are checked.
    """
    times = traj.times
    xs = np.array([reduction.original_state(z) for z in traj.states])
    h = np.diff(times)
    if len(times) < 5 or np.max(np.abs(h - h[0])) > 1e-12 * max(1.0, abs(times[-1])):
        raise ValueError('need at least 5 uniform samples')
    h = h[0]
    names = ['x%d' % (i + 1) for i in range(dae.n)]
    worst = 0.0
    for i in range(2, len(times) - 2):
        xdot = (-xs[i + 2] + 8 * xs[i + 1] - 8 * xs[i - 1] + xs[i - 2]) / (12 * h)
        t = times[i]
        env = dict(zip(names, xs[i].tolist()))
        S = np.array([e.eval(env) for e in dae.S])
        a = dae.a.eval({'t': t})
        res = dae.E.dot(xdot) - a * dae.A.dot(xs[i]) - traj.lam * dae.C_at(t).dot(S)
        worst = max(worst, float(np.max(np.abs(res))))
    return worst


# Matrix input files

_SECTION_RE = re.compile(r'^\[([A-Za-z_]+)\]$')


def parse_implicit_dae(text, params=None):
    """Implicit DAE from text with sections [E] [A] [C] [S] [a] [period]

    [E] and [A] hold rows of space-separated reals, [C] rows of
    ';'-separated expressions in t, [S] one 'name = expr' line per
    component in x1..xn, [a] 'a = expr', [period] 'T = expr'.
    """
    sections = {}
    top = []
    current = top
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        m = _SECTION_RE.match(line)
        if m:
            current = sections.setdefault(m.group(1), [])
            continue
        current.append((line, lineno))
    for sec in ('E', 'A', 'C', 'S', 'a', 'period'):
        if sec not in sections:
            raise ProblemFormatError('missing section [%s]' % sec)
    meta = dict((key.strip(), value.strip()) for key, value in
                (l.split('=', 1) for l, _ in top if '=' in l))
    constants = {'pi': Expr.const(math.pi)}

    def value_of(line, lineno):
        if '=' not in line:
            raise ProblemFormatError('line %d: expected key = value' % lineno, line=lineno)
        return line.split('=', 1)[1].strip()

    def expr(text, lineno):
        try:
            return parse(text).substitute(constants)
        except DaehError as err:
            raise ProblemFormatError('line %d: %s' % (lineno, err), line=lineno)

    try:
        E = [[float(v) for v in line.split()] for line, _ in sections['E']]
        A = [[float(v) for v in line.split()] for line, _ in sections['A']]
    except ValueError as err:
        raise ProblemFormatError('bad matrix entry: %s' % err)
    C = [[expr(cell.strip(), lineno) for cell in line.split(';')]
         for line, lineno in sections['C']]
    S = [expr(value_of(line, lineno), lineno) for line, lineno in sections['S']]
    a = expr(value_of(*sections['a'][0]), sections['a'][0][1])
    T = expr(value_of(*sections['period'][0]), sections['period'][0][1]).eval({})
    return ImplicitLinearDae(E, A, C, S, a, T, name=meta.get('name', 'implicit').strip(),
                             params=params)


def load_implicit_dae(path, params=None):
    with io.open(path, 'r', encoding='utf-8') as fd:
        return parse_implicit_dae(fd.read(), params=params)


def demo_dae(n=5, rank=3, seed=7, params=None):
    """A random rank-deficient implicit DAE of size n

    E is a product of random n x rank factors, C(t) = (1 + cos(2 pi t) / 2) E,
    S(x) = sin(x), a(t) = 1 + sin(2 pi t) / 2 and T = 1.
    """
    rng = np.random.default_rng(seed)
    E = rng.standard_normal((n, rank)).dot(rng.standard_normal((rank, n)))
    A = rng.standard_normal((n, n)) - 2.0 * np.eye(n)
    mod = parse('1 + 0.5*cos(2*pi*t)').substitute({'pi': math.pi})
    C = [[mod * float(E[i, j]) for j in range(n)] for i in range(n)]
    S = [Expr.call('sin', Expr.var('x%d' % (i + 1))) for i in range(n)]
    a = parse('1 + 0.5*sin(2*pi*t)').substitute({'pi': math.pi})
    return ImplicitLinearDae(E, A, C, S, a, 1.0, name='demo', params=params)


__all__ = (
    'ImplicitLinearDae',
    'svd',
    'numerical_rank',
    'SvdReduction',
    'reduce',
    'RankInvarianceReport',
    'a22_rank_invariance_check',
    'trivial_pairs',
    'implicit_residual',
    'parse_implicit_dae',
    'load_implicit_dae',
    'demo_dae',
)
