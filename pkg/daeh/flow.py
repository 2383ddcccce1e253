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

"""Flows on the constraint manifold

The DAE is integrated as the ODE z' = a(t) Psi(z) + lambda Upsilon(t, z) on
M with an explicit Dormand-Prince 5(4) pair. After every accepted step the
y-part is re-projected onto M when the constraint residual exceeds
CONSTRAINT_TOL.
"""

from __future__ import absolute_import, division, print_function

import logging
import math

import numpy as np
import scipy.integrate

from daeh.core import (get_params, parallel_map, BlowUp, LeftDomain, StiffFailure)
from daeh.core.manifold import ManifoldPoint, field, solve_constraint
from daeh.core.model import PointKS, as_array, integrate_signal
from daeh.core.serialize import ImmutableRecord, write_csv

log = logging.getLogger(__name__)


class Trajectory(ImmutableRecord):
    """Sampled solution; states are rows (x, y) at the sample times"""
    __slots__ = ['times', 'states', 'g_residuals', 'lam', 'k', 'max_g_residual']

    def __init__(self, times, states, g_residuals, lam, k):
        times = np.asarray(times, dtype=float)
        states = np.asarray(states, dtype=float)
        g_residuals = np.asarray(g_residuals, dtype=float)
        self._set(times=times, states=states, g_residuals=g_residuals,
                  lam=float(lam), k=int(k),
                  max_g_residual=float(np.max(g_residuals)) if len(g_residuals) else 0.0)

    @property
    def samples(self):
        return [(t, PointKS.from_array(z, self.k)) for t, z in zip(self.times, self.states)]

    @property
    def final(self):
        return self.states[-1]

    def to_dict(self):
        return {'lambda': self.lam,
                'max_g_residual': self.max_g_residual,
                'samples': [{'t': t, 'x': z[:self.k], 'y': z[self.k:]}
                            for t, z in zip(self.times, self.states)]}


def write_trajectory_csv(fd, traj):
    """Columns t, x1..xk, y1..ys, g_residual"""
    k = traj.k
    s = traj.states.shape[1] - k
    header = (['t'] + ['x%d' % (i + 1) for i in range(k)] +
              ['y%d' % (i + 1) for i in range(s)] + ['g_residual'])
    rows = ([t] + list(z) + [r]
            for t, z, r in zip(traj.times, traj.states, traj.g_residuals))
    write_csv(fd, header, rows)


def _sample_times(t0, t1, samples, params):
    if samples is None:
        samples = params.SAMPLES
    if np.isscalar(samples):
        n = int(samples)
        if n < 2:
            raise ValueError('need at least 2 samples')
        return np.linspace(t0, t1, n)
    times = np.asarray(samples, dtype=float)
    if len(times) == 0 or np.any(np.diff(times) <= 0):
        raise ValueError('sample times must be strictly increasing')
    if times[0] < t0 or times[-1] > t1:
        raise ValueError('sample times must lie in [%g, %g]' % (t0, t1))
    return times


def _project(prob, z, params):
    """z with its y-part moved back onto M when max|g| > CONSTRAINT_TOL"""
    res = float(np.max(np.abs(prob.eval_g(z))))
    if res > params.CONSTRAINT_TOL:
        q = solve_constraint(prob, z[:prob.k], z[prob.k:], params=params)
        z = np.concatenate([z[:prob.k], q])
        res = float(np.max(np.abs(prob.eval_g(z))))
    return z, res


def _check_state(prob, t, z, params):
    if not np.all(np.isfinite(z)) or np.linalg.norm(z) > params.ESCAPE_BOUND:
        raise BlowUp('state norm exceeds %g at t=%.6g' % (params.ESCAPE_BOUND, t), t=t)
    if not prob.contains(z):
        raise LeftDomain('trajectory left the domain at t=%.6g' % t, t=t, z=z.tolist())


def integrate(prob, lam, z0, t0, t1, samples=None, params=None, drift=None):
    """Integrate from z0 at t0 to t1

    samples is a count of uniform sample times or an increasing sequence of
    times in [t0, t1]. drift replaces a(t) by a constant when given.
    """
    params = get_params(params)
    if not t1 > t0:
        raise ValueError('need t1 > t0; got [%g, %g]' % (t0, t1))
    if not isinstance(z0, ManifoldPoint):
        z0 = ManifoldPoint.on(prob, z0, params=params)
    times = _sample_times(t0, t1, samples, params)

    def rhs(t, z):
        return field(prob, t, z, lam, params=params, drift=drift)

    solver = scipy.integrate.RK45(rhs, t0, as_array(z0), t1,
                                  rtol=params.RTOL, atol=params.ATOL)
    out_z = []
    out_res = []
    i = 0
    while solver.status == 'running':
        message = solver.step()
        if solver.status == 'failed':
            raise StiffFailure('integration failed at t=%.6g: %s' % (solver.t, message),
                               t=solver.t)
        dense = solver.dense_output()
        _check_state(prob, solver.t, solver.y, params)
        z, _ = _project(prob, solver.y, params)
        if z is not solver.y:
            solver.y = z
            solver.f = rhs(solver.t, z)
        while i < len(times) and times[i] <= solver.t:
            zs = dense(times[i])
            _check_state(prob, times[i], zs, params)
            zs, res = _project(prob, zs, params)
            out_z.append(zs)
            out_res.append(res)
            i += 1
    log.debug('integrated [%g, %g] in %d rhs evaluations', t0, t1, solver.nfev)
    return Trajectory(times, out_z, out_res, lam, prob.k)


def phi_a(prob, t, params=None):
    """The integral of a over [0, t]"""
    params = get_params(params)
    return integrate_signal(prob.a, 0.0, float(t), params.QUAD_TOL)


def reparametrized(prob, z0, t, params=None):
    """Solution of z' = a(t) Psi(z) at time t, through the autonomous flow

    The autonomous field Psi is followed for time phi_a(t), backwards when
    that is negative.
    """
    params = get_params(params)
    s = phi_a(prob, t, params=params)
    if s == 0.0:
        return as_array(z0)
    sign = 1.0 if s > 0 else -1.0
    traj = integrate(prob, 0.0, z0, 0.0, abs(s), samples=2, params=params, drift=sign)
    return traj.final


class MonodromyReport(ImmutableRecord):
    """x-component of the time-T map and its derivative

    P_T is the x-part of the flow at time T from (x0, y0); M_matrix is its
    one-sided finite-difference Jacobian in x0.
    """
    __slots__ = ['x0', 'y0', 'lam', 'P_T', 'y_T', 'M_matrix', 'fd_steps']

    def __init__(self, x0, y0, lam, P_T, y_T, M_matrix, fd_steps):
        self._set(x0=x0, y0=y0, lam=float(lam), P_T=P_T, y_T=y_T,
                  M_matrix=M_matrix, fd_steps=fd_steps)

    def to_dict(self):
        return {'x0': self.x0, 'y0': self.y0, 'lambda': self.lam,
                'P_T': self.P_T, 'y_T': self.y_T, 'M': self.M_matrix}


def time_T_map(prob, lam, x0, q_guess, params=None):
    """(x(T), y(T), y0) from x0 with y0 solved from q_guess"""
    params = get_params(params)
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    y0 = solve_constraint(prob, x0, q_guess, params=params)
    traj = integrate(prob, lam, np.concatenate([x0, y0]), 0.0, prob.T,
                     samples=2, params=params)
    zT = traj.final
    return zT[:prob.k], zT[prob.k:], y0


def default_q_guess(prob):
    """Zero clipped into the y-part of the capped domain"""
    box = prob.box()[prob.k:]
    q = []
    for lo, hi in box:
        if lo < 0.0 < hi:
            q.append(0.0)
        else:
            q.append(0.5 * (lo + hi))
    return np.array(q)


def poincare_T(prob, lam, x0, q_guess=None, params=None, fd_step=None):
    """Time-T map of the x-component and its monodromy matrix

    Column i of the monodromy is (P_T(x0 + h_i e_i) - P_T(x0)) / h_i with
    h_i = fd_step (1 + |x0_i|); the k + 1 integrations go through the
    worker pool.
    """
    params = get_params(params)
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if q_guess is None:
        q_guess = default_q_guess(prob)
    if fd_step is None:
        fd_step = params.FD_STEP
    y0 = solve_constraint(prob, x0, q_guess, params=params)
    steps = fd_step * (1.0 + np.abs(x0))
    starts = [x0]
    for i in range(prob.k):
        xi = x0.copy()
        xi[i] += steps[i]
        starts.append(xi)

    results = parallel_map(lambda xs: time_T_map(prob, lam, xs, y0, params=params), starts)
    P_T, y_T, _ = results[0]
    M = np.empty((prob.k, prob.k))
    for i in range(prob.k):
        M[:, i] = (results[i + 1][0] - P_T) / steps[i]
    return MonodromyReport(x0, y0, lam, P_T, y_T, M, steps)


def floquet_multipliers(m):
    """Eigenvalues of a monodromy matrix, by decreasing modulus"""
    mu = np.linalg.eigvals(np.atleast_2d(m))
    return sorted(mu.tolist(), key=lambda c: (-abs(c), -c.real, -c.imag))


def time_average_check(prob, x0, params=None):
    """|P_T of a(t) Psi - autonomous Psi flow over phi_a(T)| at x0, lambda = 0

    Equal when phi_a(T) = T, the case a_mean = 1.
    """
    params = get_params(params)
    y0 = solve_constraint(prob, x0, default_q_guess(prob), params=params)
    z0 = np.concatenate([np.asarray(x0, dtype=float).reshape(-1), y0])
    direct = integrate(prob, 0.0, z0, 0.0, prob.T, samples=2, params=params).final
    via = reparametrized(prob, z0, prob.T, params=params)
    return float(np.max(np.abs(direct[:prob.k] - via[:prob.k])))


__all__ = (
    'Trajectory',
    'write_trajectory_csv',
    'integrate',
    'phi_a',
    'reparametrized',
    'MonodromyReport',
    'time_T_map',
    'default_q_guess',
    'poincare_T',
    'floquet_multipliers',
    'time_average_check',
)
