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

"""The constraint manifold M = g^-1(0) and its tangent fields

Since d2g is invertible on U, M is locally the graph of q over p. Points
are found by fixing p and solving g(p, q) = 0 for q; vectors w of R^k are
lifted to T_zM = ker dg as (w, -d2g^-1 d1g w).
"""

from __future__ import absolute_import, division, print_function

import logging

import numpy as np

from daeh.core import (get_params, EvalDomainError, LeftDomain, NoConvergence,
                       OffManifold)
from daeh.core.linalg import kernel_basis, solve_block
from daeh.core.model import PointKS, as_array
from daeh.core.serialize import ImmutableRecord

log = logging.getLogger(__name__)

_MAX_HALVINGS = 30


def solve_constraint(prob, p, q_guess, params=None):
    """Solve g(p, q) = 0 for q by damped Newton, p fixed

    Returns q with max|g(p, q)| <= CONSTRAINT_SOLVE_TOL. Raises NoConvergence
    with the residual history, SingularBlock, or LeftDomain when every trial
    step leaves the domain.
    """
    params = get_params(params)
    p = np.asarray(p, dtype=float).reshape(-1)
    q = np.array(q_guess, dtype=float).reshape(-1)
    if len(p) != prob.k or len(q) != prob.s:
        raise ValueError('expected p of length %d and q of length %d' % (prob.k, prob.s))
    z = np.concatenate([p, q])
    if not prob.contains(z):
        raise LeftDomain('constraint solve started outside the domain', z=z.tolist())

    history = []
    for _ in range(params.CONSTRAINT_MAXITER):
        g, _, d2g = prob.g_blocks(z)
        res = float(np.max(np.abs(g)))
        history.append(res)
        if res <= params.CONSTRAINT_SOLVE_TOL:
            return q
        dq = solve_block(d2g, -g, params.SINGULAR_TOL, 'd2g')

        step = 1.0
        inside = False
        accepted = None
        for _ in range(_MAX_HALVINGS):
            qn = q + step * dq
            zn = np.concatenate([p, qn])
            if prob.contains(zn):
                inside = True
                try:
                    res_n = float(np.max(np.abs(prob.eval_g(zn))))
                except EvalDomainError:
                    res_n = None
                if res_n is not None and res_n < res:
                    accepted = qn
                    break
            step *= 0.5

        if accepted is None:
            if not inside:
                raise LeftDomain('constraint Newton steps leave the domain',
                                 z=z.tolist(), residual_history=history)
            if res <= params.CONSTRAINT_TOL:
                # stalled at rounding level
                return q
            break
        q = accepted
        z = np.concatenate([p, q])

    raise NoConvergence('constraint solve did not converge; residual %.3e' % history[-1],
                        residual_history=history)


class ManifoldPoint(ImmutableRecord):
    """A point of M with its constraint residual"""
    __slots__ = ['z', 'g_residual']

    def __init__(self, z, g_residual):
        if not isinstance(z, PointKS):
            raise ValueError('z must be a PointKS')
        self._set(z=z, g_residual=float(g_residual))

    @classmethod
    def on(cls, prob, z, params=None):
        """Wrap z, checking max|g(z)| <= CONSTRAINT_TOL"""
        params = get_params(params)
        arr = as_array(z)
        res = float(np.max(np.abs(prob.eval_g(arr))))
        if not res <= params.CONSTRAINT_TOL:
            raise OffManifold('max|g| = %.3e exceeds %.1e' % (res, params.CONSTRAINT_TOL),
                              residual=res, z=arr.tolist())
        return cls(PointKS.from_array(arr, prob.k), res)

    @property
    def p(self):
        return self.z.p

    @property
    def q(self):
        return self.z.q

    @property
    def point(self):
        return self.z

    def to_dict(self):
        return {'p': self.z.p, 'q': self.z.q, 'g_residual': self.g_residual}


def manifold_point(prob, p, q_guess, params=None):
    """The point (p, q) of M with q found from q_guess"""
    q = solve_constraint(prob, p, q_guess, params=params)
    return ManifoldPoint.on(prob, np.concatenate([np.asarray(p, dtype=float).reshape(-1), q]),
                            params=params)


class TangentVector(ImmutableRecord):
    """(u, v) in T_zM; tangency_residual is max|d1g u + d2g v|"""
    __slots__ = ['u', 'v', 'tangency_residual']

    def __init__(self, u, v, tangency_residual=0.0):
        self._set(u=np.asarray(u, dtype=float), v=np.asarray(v, dtype=float),
                  tangency_residual=float(tangency_residual))

    @property
    def array(self):
        return np.concatenate([self.u, self.v])

    def to_dict(self):
        return {'u': self.u, 'v': self.v, 'tangency_residual': self.tangency_residual}


def lift(prob, z, w, params=None):
    """Lift w in R^k to T_zM"""
    params = get_params(params)
    arr = as_array(z)
    _, d1g, d2g = prob.g_blocks(arr)
    w = np.asarray(w, dtype=float)
    rhs = d1g.dot(w)
    v = -solve_block(d2g, rhs, params.SINGULAR_TOL, 'd2g')
    res = float(np.max(np.abs(rhs + d2g.dot(v)))) if len(v) else 0.0
    scale = 1.0 + np.linalg.norm(w) + np.linalg.norm(v)
    if res > params.TANGENCY_TOL * scale:
        log.warning('tangency residual %.3e at z=%s', res, arr.tolist())
    return TangentVector(w, v, res)


def psi(prob, z, params=None):
    """Psi(z) = (f, -d2g^-1 d1g f)"""
    return lift(prob, z, prob.eval_f(as_array(z)), params=params)


def upsilon(prob, t, z, params=None):
    """Upsilon(t, z) = (h, -d2g^-1 d1g h)"""
    return lift(prob, z, prob.eval_h(t, as_array(z)), params=params)


def field(prob, t, z, lam, params=None, drift=None):
    """The right-hand side a(t) Psi(z) + lambda Upsilon(t, z) as an array

    drift replaces a(t) when given.
    """
    arr = as_array(z)
    a = prob.eval_a(t) if drift is None else drift
    w = a * prob.eval_f(arr)
    if lam:
        w = w + lam * prob.eval_h(t, arr)
    return lift(prob, arr, w, params=params).array


def tangent_basis(prob, z):
    """Orthonormal basis (columns) of T_zM = ker dg

    Oriented so that its x-block, the chart given by projection onto the
    x-coordinates, has positive determinant.
    """
    arr = as_array(z)
    _, d1g, d2g = prob.g_blocks(arr)
    basis = kernel_basis(np.hstack([d1g, d2g]))
    if np.linalg.det(basis[:prob.k, :]) < 0:
        basis[:, 0] = -basis[:, 0]
    return basis


__all__ = (
    'solve_constraint',
    'ManifoldPoint',
    'manifold_point',
    'TangentVector',
    'lift',
    'psi',
    'upsilon',
    'field',
    'tangent_basis',
)
