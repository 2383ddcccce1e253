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

"""T-periodic pairs: shooting, branches and multiplicity

A T-periodic solution is a fixed point x0 of the time-T map P_T acting on
the x-component; y is always rebuilt on the constraint manifold. Branches
of pairs (lambda, x0) are followed from trivial pairs by pseudo-arclength
continuation.

A branch is a finite sample of one connected set of pairs. NormEscape and
LeftDomain stand in for an unbounded branch but do not certify one.
"""

from __future__ import absolute_import, division, print_function

import copy
import logging

import numpy as np

from daeh.core import (get_params, parallel_map, BlowUp, DaehError, DegreeMatch,
                       InsufficientOrbits, LeftDomain, NoConvergence,
                       ResonantOrigin, SingularShootingJacobian, StepFailure,
                       UnresolvedDegree)
from daeh.core.model import as_array
from daeh.core.serialize import ImmutableRecord, write_csv
from daeh.degree import degree, find_zeros, index_of
from daeh.flow import (default_q_guess, floquet_multipliers, integrate, poincare_T,
                       time_T_map)
from daeh.resonance import is_T_resonant

log = logging.getLogger(__name__)

_LINE_SEARCH_HALVINGS = 10
_CORRECTOR_MAXITER = 10

TERMINATIONS = ('ReachedLambdaMax', 'LeftDomain', 'NormEscape', 'ReturnedToTrivial',
                'FoldLimit', 'StepFailure')
CONCLUSIVE_TERMINATIONS = ('ReachedLambdaMax', 'LeftDomain', 'NormEscape',
                           'ReturnedToTrivial')

# failures that make a shooting trial unusable without ending the search
_TRIAL_ERRORS = (DaehError, np.linalg.LinAlgError)


class PeriodicOrbit(ImmutableRecord):
    """A T-periodic pair (lambda, x0) with its sampled orbit

    correction is the size of the Newton step the monodromy still proposes
    at x0; residual_history holds the shooting residuals that led to it.
    """
    __slots__ = ['lam', 'x0', 'y0', 'orbit', 'shoot_residual', 'monodromy', 'floquet',
                 'stable', 'correction', 'residual_history']

    def __init__(self, lam, x0, y0, orbit, shoot_residual, monodromy, correction=0.0,
                 residual_history=()):
        floquet = floquet_multipliers(monodromy)
        self._set(lam=float(lam), x0=np.asarray(x0, dtype=float),
                  y0=np.asarray(y0, dtype=float), orbit=orbit,
                  shoot_residual=float(shoot_residual), monodromy=monodromy,
                  floquet=floquet, stable=all(abs(mu) < 1.0 for mu in floquet),
                  correction=float(correction),
                  residual_history=tuple(float(r) for r in residual_history))

    def to_dict(self):
        return {'lambda': self.lam,
                'x0': self.x0,
                'y0': self.y0,
                'shoot_residual': self.shoot_residual,
                'correction': self.correction,
                'max_g_residual': self.orbit.max_g_residual,
                'monodromy': self.monodromy,
                'floquet': self.floquet,
                'stable': self.stable}


def orbit_distance(a, b):
    """max over the common sample times of max|z_a(t) - z_b(t)|"""
    return float(np.max(np.abs(a.orbit.states - b.orbit.states)))


def _newton_step(rep):
    """Solution dx of (M - I) dx = -(P_T(x0) - x0); LinAlgError when singular"""
    k = len(rep.x0)
    return np.linalg.solve(rep.M_matrix - np.eye(k), rep.x0 - rep.P_T)


def _build_orbit(prob, lam, x0, y0, rep, params, history=()):
    orbit = integrate(prob, lam, np.concatenate([x0, y0]), 0.0, prob.T, params=params)
    res = float(np.max(np.abs(rep.P_T - x0)))
    try:
        correction = float(np.max(np.abs(_newton_step(rep))))
    except np.linalg.LinAlgError:
        correction = np.inf
    return PeriodicOrbit(lam, x0, y0, orbit, res, rep.M_matrix, correction, history)


def _shooting_cond(M):
    """Condition of I - M against the scale of I and M; inf when singular"""
    smin = float(np.linalg.svd(np.eye(M.shape[0]) - M, compute_uv=False)[-1])
    if not smin > 0.0:
        return np.inf
    return max(1.0, float(np.linalg.norm(M, 2))) / smin


def _shoot_residual(prob, lam, x, q_guess, params):
    try:
        P, _, _ = time_T_map(prob, lam, x, q_guess, params=params)
    except _TRIAL_ERRORS:
        return np.inf
    return float(np.max(np.abs(P - x)))


def find_periodic(prob, lam, x_guess, q_guess=None, params=None):
    """Damped Newton on R(x0) = P_T(x0) - x0 with the finite-difference monodromy

    x0 is accepted once max|R| <= SHOOT_TOL and the Newton step the
    monodromy proposes there is within SHOOT_STEP_TOL (1 + max|x0|). Near a
    degenerate zero R is flat and the residual test holds on a whole
    neighbourhood of the orbit; iterates there keep stepping while the
    residual stays within SHOOT_TOL.

    Raises SingularShootingJacobian when I - M is numerically singular (near
    resonance) and NoConvergence when no step reduces the residual.
    """
    params = get_params(params)
    x = np.array(x_guess, dtype=float).reshape(-1)
    q = default_q_guess(prob) if q_guess is None else np.asarray(q_guess, dtype=float)
    history = []
    for _ in range(params.SHOOT_MAXITER + 1):
        rep = poincare_T(prob, lam, x, q, params=params)
        res = float(np.max(np.abs(rep.P_T - x)))
        history.append(res)
        cond = _shooting_cond(rep.M_matrix)
        if not cond <= params.SHOOT_COND_LIMIT:
            raise SingularShootingJacobian('I - M is singular (cond %.3e)' % cond,
                                           cond=cond, x0=x.tolist(), lam=lam,
                                           residual=res)
        dx = _newton_step(rep)
        correction = float(np.max(np.abs(dx)))
        log.debug('shooting lambda=%g residual %.3e correction %.3e', lam, res, correction)
        flat = res <= params.SHOOT_TOL
        if flat and correction <= params.SHOOT_STEP_TOL * (1.0 + float(np.max(np.abs(x)))):
            return _build_orbit(prob, lam, x, rep.y0, rep, params, history)
        step = 1.0
        for _ in range(_LINE_SEARCH_HALVINGS):
            xn = x + step * dx
            trial = _shoot_residual(prob, lam, xn, rep.y0, params)
            if trial < res or (flat and trial <= params.SHOOT_TOL):
                break
            step *= 0.5
        else:
            raise NoConvergence('shooting line search failed at residual %.3e, '
                                'correction %.3e' % (res, correction),
                                residual_history=history, correction=correction)
        x = xn
        q = rep.y0
    raise NoConvergence('shooting did not converge; residual %.3e, correction %.3e'
                        % (history[-1], correction),
                        residual_history=history, correction=correction)


def reverify(prob, orbit, params=None):
    """Change of P_T(x0) when integrating with half the tolerances"""
    params = get_params(params)
    tight = copy.copy(params)
    tight.RTOL = params.RTOL / 2
    tight.ATOL = params.ATOL / 2
    P, _, _ = time_T_map(prob, orbit.lam, orbit.x0, orbit.y0, params=tight)
    P0, _, _ = time_T_map(prob, orbit.lam, orbit.x0, orbit.y0, params=params)
    return float(np.max(np.abs(P - P0)))


class Branch(ImmutableRecord):
    """Sampled branch of T-periodic pairs from a trivial pair

    returned_to is the position of the other zero in the zero list when the
    termination is ReturnedToTrivial.
    """
    __slots__ = ['points', 'origin', 'termination', 'returned_to', 'steps']

    def __init__(self, points, origin, termination, returned_to=None, steps=0):
        if termination not in TERMINATIONS:
            raise ValueError('unknown termination %r' % termination)
        self._set(points=tuple(points), origin=origin, termination=termination,
                  returned_to=returned_to, steps=steps)

    @property
    def conclusive(self):
        return self.termination in CONCLUSIVE_TERMINATIONS

    @property
    def lambda_reached(self):
        return max(p.lam for p in self.points)

    def to_dict(self):
        return {'origin': self.origin,
                'termination': self.termination,
                'conclusive': self.conclusive,
                'returned_to': self.returned_to,
                'steps': self.steps,
                'lambda_reached': self.lambda_reached,
                'points': [{'lambda': p.lam, 'x0': p.x0, 'shoot_residual': p.shoot_residual}
                           for p in self.points]}


def write_branch_csv(fd, branch):
    """Columns step, lambda, x0_1..x0_k, shoot_residual, termination"""
    k = len(branch.points[0].x0)
    header = (['step', 'lambda'] + ['x0_%d' % (i + 1) for i in range(k)] +
              ['shoot_residual', 'termination'])
    rows = ([i, p.lam] + list(p.x0) + [p.shoot_residual, branch.termination]
            for i, p in enumerate(branch.points))
    write_csv(fd, header, rows)


def _lambda_derivative(prob, lam, x, y0, P, params):
    dl = params.FD_STEP * (1.0 + abs(lam))
    P_l, _, _ = time_T_map(prob, lam + dl, x, y0, params=params)
    return (P_l - P) / dl


def _corrector(prob, u_pred, u_prev, tangent, ds, q_guess, params):
    """Newton on (R(x, lambda), tangent . (u - u_prev) - ds)"""
    k = prob.k
    u = u_pred.copy()
    for it in range(_CORRECTOR_MAXITER):
        lam, x = u[0], u[1:]
        rep = poincare_T(prob, lam, x, q_guess, params=params)
        R = rep.P_T - x
        arc = float(tangent.dot(u - u_prev) - ds)
        if np.max(np.abs(R)) <= params.SHOOT_TOL and abs(arc) <= 1e-8 * max(ds, 1.0):
            return u, rep, it
        R_l = _lambda_derivative(prob, lam, x, rep.y0, rep.P_T, params)
        J = np.zeros((k + 1, k + 1))
        J[:k, 0] = R_l
        J[:k, 1:] = rep.M_matrix - np.eye(k)
        J[k, :] = tangent
        du = np.linalg.solve(J, -np.concatenate([R, [arc]]))
        u = u + du
        q_guess = rep.y0
    raise NoConvergence('corrector did not converge at ds=%g' % ds, ds=ds)


def _near_other_zero(x, origin, zeros, k, radius):
    for i, zero in enumerate(zeros):
        zx = zero.z.z[:k]
        if np.max(np.abs(zx - origin.z.z[:k])) <= radius:
            continue
        if np.max(np.abs(x - zx)) <= radius:
            return i
    return None


def continue_branch(prob, origin, lambda_max, ds0=None, ds_min=None, ds_max=None,
                    max_steps=None, zeros=None, params=None):
    """Follow the branch of T-periodic pairs emanating from a trivial pair

    Pseudo-arclength continuation in (lambda, x0) with a secant predictor.
    The zero list used by the ReturnedToTrivial test is searched lazily when
    not given.
    """
    params = get_params(params)
    ds = params.DS0 if ds0 is None else ds0
    ds_min = params.DS_MIN if ds_min is None else ds_min
    ds_max = params.DS_MAX if ds_max is None else ds_max
    max_steps = params.MAX_STEPS if max_steps is None else max_steps
    k = prob.k
    box = prob.box()

    report = is_T_resonant(prob, origin, params=params)
    if report.resonant:
        raise ResonantOrigin('zero %s is T-resonant (n = %s); the branch predictor is '
                             'undefined there' % (as_array(origin).tolist(), report.matched_n),
                             matched_n=report.matched_n)

    x0 = origin.z.z[:k]
    start = find_periodic(prob, 0.0, x0, origin.z.z[k:], params=params)
    points = [start]
    rep0 = poincare_T(prob, 0.0, start.x0, start.y0, params=params)
    R_l = _lambda_derivative(prob, 0.0, start.x0, rep0.y0, rep0.P_T, params)
    v = -np.linalg.solve(rep0.M_matrix - np.eye(k), R_l)
    tangent = np.concatenate([[1.0], v])
    tangent /= np.linalg.norm(tangent)

    u = np.concatenate([[0.0], start.x0])
    q_guess = start.y0
    reversals = 0
    termination = None
    returned_to = None
    last_error = None
    steps = 0
    while termination is None:
        if steps >= max_steps:
            log.warning('branch stopped after %d steps', steps)
            termination = 'StepFailure'
            break
        try:
            u_new, rep, iterations = _corrector(prob, u + ds * tangent, u, tangent, ds,
                                                q_guess, params)
        except _TRIAL_ERRORS as err:
            last_error = err
            ds *= 0.5
            log.debug('corrector failed (%s); ds -> %g', err, ds)
            if ds < ds_min:
                if isinstance(err, BlowUp):
                    termination = 'NormEscape'
                elif isinstance(err, LeftDomain):
                    termination = 'LeftDomain'
                else:
                    termination = 'StepFailure'
            continue
        steps += 1
        lam, x = u_new[0], u_new[1:]

        if lam >= lambda_max:
            # land exactly on lambda_max
            frac = (lambda_max - u[0]) / (lam - u[0])
            x_guess = u[1:] + frac * (x - u[1:])
            try:
                points.append(find_periodic(prob, lambda_max, x_guess, rep.y0,
                                            params=params))
                termination = 'ReachedLambdaMax'
            except _TRIAL_ERRORS as err:
                last_error = err
                ds *= 0.5
                if ds < ds_min:
                    termination = 'StepFailure'
            continue

        if np.linalg.norm(x) > params.ESCAPE_BOUND:
            termination = 'NormEscape'
            break
        if not all(lo < v < hi for v, (lo, hi) in zip(x, box[:k])):
            termination = 'LeftDomain'
            break

        points.append(_build_orbit(prob, lam, x, rep.y0, rep, params))
        if lam < params.TRIVIAL_LAMBDA:
            if zeros is None:
                zeros = find_zeros(prob, params=params)
            returned_to = _near_other_zero(x, origin, zeros, k, params.TRIVIAL_RADIUS)
            if returned_to is not None:
                termination = 'ReturnedToTrivial'
                break
            if lam < 0.0:
                termination = 'LeftDomain'
                break

        secant = u_new - u
        secant /= np.linalg.norm(secant)
        if np.sign(secant[0]) != np.sign(tangent[0]):
            reversals += 1
            if reversals >= params.FOLD_REVERSALS:
                termination = 'FoldLimit'
        else:
            reversals = 0
        tangent = secant
        u = u_new
        q_guess = rep.y0
        if iterations <= 3:
            ds = min(2.0 * ds, ds_max)

    if termination == 'StepFailure' and len(points) == 1:
        raise StepFailure('no nontrivial point from %s (last error: %s)'
                          % (x0.tolist(), last_error), x0=x0.tolist())
    if termination not in CONCLUSIVE_TERMINATIONS:
        log.warning('branch from %s ended inconclusively: %s', x0.tolist(), termination)
    log.info('branch from %s: %s after %d steps, lambda %g', x0.tolist(), termination,
             steps, max(p.lam for p in points))
    return Branch(points, origin, termination, returned_to, steps)


class EjectionVerdict(ImmutableRecord):
    __slots__ = ['zero', 'ejecting', 'lambda_probe', 'lambda_reached', 'termination']

    def __init__(self, zero, ejecting, lambda_probe, lambda_reached, termination):
        self._set(zero=zero, ejecting=bool(ejecting), lambda_probe=float(lambda_probe),
                  lambda_reached=float(lambda_reached), termination=termination)

    def to_dict(self):
        return {'zero': self.zero.z.z, 'ejecting': self.ejecting,
                'lambda_probe': self.lambda_probe, 'lambda_reached': self.lambda_reached,
                'termination': self.termination}


def ejection_verdict(prob, zero, lambda_probe, params=None):
    """Whether the branch from the zero carries an accepted orbit at lambda_probe"""
    params = get_params(params)
    branch = continue_branch(prob, zero, lambda_probe, ds0=min(params.DS0, lambda_probe),
                             params=params)
    ejecting = any(p.lam >= lambda_probe and p.shoot_residual <= params.SHOOT_TOL
                   for p in branch.points)
    return EjectionVerdict(zero, ejecting, lambda_probe, branch.lambda_reached,
                           branch.termination)


class IsolationReport(ImmutableRecord):
    """Shooting Jacobian I - M of the constant orbit at a zero, lambda = 0"""
    __slots__ = ['zero', 'cond', 'isolated', 'multipliers']

    def __init__(self, zero, cond, isolated, multipliers):
        self._set(zero=zero, cond=float(cond), isolated=bool(isolated),
                  multipliers=multipliers)

    def to_dict(self):
        return {'zero': self.zero.z.z, 'cond': self.cond, 'isolated': self.isolated,
                'multipliers': self.multipliers}


def isolation_check(prob, zero, params=None):
    """Whether the trivial pair at the zero is isolated among lambda = 0 pairs

    A nonsingular I - M makes the constant orbit an isolated fixed point of
    P_T.
    """
    params = get_params(params)
    z = zero.z.z
    rep = poincare_T(prob, 0.0, z[:prob.k], z[prob.k:], params=params)
    cond = _shooting_cond(rep.M_matrix)
    return IsolationReport(zero, cond, cond <= params.SHOOT_COND_LIMIT,
                           floquet_multipliers(rep.M_matrix))


class MultiplicityResult(ImmutableRecord):
    """Pairwise distinct T-periodic orbits at lambda"""
    __slots__ = ['lam', 'orbits', 'distances', 'degree', 'index_sum', 'attempts']

    def __init__(self, lam, orbits, distances, degree, index_sum, attempts):
        self._set(lam=float(lam), orbits=tuple(orbits), distances=distances,
                  degree=degree, index_sum=index_sum, attempts=attempts)

    def to_dict(self):
        return {'lambda': self.lam,
                'degree': self.degree,
                'index_sum': self.index_sum,
                'attempts': self.attempts,
                'orbits': list(self.orbits),
                'distances': self.distances}


def _accepted(orbit, params):
    return (orbit.shoot_residual <= params.SHOOT_TOL and
            orbit.correction <= params.SHOOT_STEP_TOL * (1.0 + float(np.max(np.abs(orbit.x0)))))


def _distinct(orbits, tol):
    kept = []
    for orbit in sorted(orbits, key=lambda o: (o.shoot_residual, tuple(o.x0))):
        if all(orbit_distance(orbit, other) > tol for other in kept):
            kept.append(orbit)
    kept.sort(key=lambda o: tuple(o.x0))
    return kept


def _x_seeds(prob, box, grid_per_dim, zeros, rng):
    k = prob.k
    axes = [lo + (np.arange(grid_per_dim) + 0.5) * (hi - lo) / grid_per_dim
            for lo, hi in box[:k]]
    grid = np.array(np.meshgrid(*axes, indexing='ij')).reshape(k, -1).T
    seeds = [z.z.z[:k] for z in zeros] + list(grid)
    if rng is not None:
        order = rng.permutation(len(seeds))
        seeds = [seeds[i] for i in order]
    return seeds


def multiplicity_scan(prob, lambda_small, zeros, box=None, grid_per_dim=8, seed=None,
                      params=None):
    """At least r + 1 distinct T-periodic orbits near lambda = 0

    zeros are the r non-T-resonant zeros whose indices do not add up to the
    degree of F on the box. Orbits come from the branches of these zeros
    and from multistart shooting; lambda is halved while fewer than r + 1
    distinct orbits are found.
    """
    params = get_params(params)
    for zero in zeros:
        rep = is_T_resonant(prob, zero, params=params)
        if rep.resonant:
            raise ResonantOrigin('listed zero %s is T-resonant' % zero.z.z.tolist(),
                                 matched_n=rep.matched_n)
    report = degree(prob, box, params=params, stability=False)
    box = report.box
    if report.total_degree is None:
        raise UnresolvedDegree('degree on the box is unknown')
    index_sum = sum(index_of(prob, zero, params=params) for zero in zeros)
    if report.total_degree == index_sum:
        raise DegreeMatch('degree %d equals the index sum of the listed zeros'
                          % report.total_degree, degree=report.total_degree,
                          index_sum=index_sum)
    r = len(zeros)
    rng = None if seed is None else np.random.default_rng(seed)
    seeds = _x_seeds(prob, box, grid_per_dim, report.zeros, rng)

    lam = float(lambda_small)
    found = []
    for attempt in range(params.BACKOFF_RETRIES + 1):
        orbits = []
        for zero in zeros:
            try:
                branch = continue_branch(prob, zero, lam, ds0=min(params.DS0, lam),
                                         zeros=report.zeros, params=params)
            except DaehError as err:
                log.warning('no branch from %s: %s', zero.z.z.tolist(), err)
                continue
            orbits.extend(p for p in branch.points if abs(p.lam - lam) <= 1e-12)

        def shoot(x):
            try:
                return find_periodic(prob, lam, x, params=params)
            except _TRIAL_ERRORS as err:
                log.debug('shooting from %s failed: %s', list(x), err)
                return None
        orbits.extend(o for o in parallel_map(shoot, seeds) if o is not None)
        orbits = [o for o in orbits if _accepted(o, params)]
        found = _distinct(orbits, params.ORBIT_DISTINCT_TOL)
        log.info('lambda=%g: %d distinct orbits (need %d)', lam, len(found), r + 1)
        if len(found) >= r + 1:
            distances = [[orbit_distance(a, b) for b in found] for a in found]
            return MultiplicityResult(lam, found, distances, report.total_degree,
                                      index_sum, attempt + 1)
        lam *= 0.5
        log.warning('backing off to lambda=%g', lam)
    raise InsufficientOrbits('found %d distinct orbits, need %d' % (len(found), r + 1),
                             found=len(found), needed=r + 1)


__all__ = (
    'TERMINATIONS',
    'CONCLUSIVE_TERMINATIONS',
    'PeriodicOrbit',
    'orbit_distance',
    'find_periodic',
    'reverify',
    'Branch',
    'write_branch_csv',
    'continue_branch',
    'EjectionVerdict',
    'ejection_verdict',
    'IsolationReport',
    'isolation_check',
    'MultiplicityResult',
    'multiplicity_scan',
)
