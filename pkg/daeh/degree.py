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

"""Zeros of F, their indices and the Brouwer degree on a box

The degree is obtained by enumerating zeros with multistart Newton and
summing indices: sign det dF at nondegenerate zeros, the winding number of
F around a small circle at degenerate planar ones.
"""

from __future__ import absolute_import, division, print_function

import itertools
import logging
import math

import numpy as np

from daeh.core import (get_params, parallel_map, AmbiguousWinding, BoundaryZero,
                       DaehError, DegenerateTangentZero, DegenerateUnsupportedDim,
                       EvalDomainError, UsageError)
from daeh.core.linalg import is_degenerate, row_scale
from daeh.core.manifold import psi, solve_constraint, tangent_basis
from daeh.core.model import PointKS, as_array, eval_F, jac_F
from daeh.core.serialize import ImmutableRecord

log = logging.getLogger(__name__)

_MAX_HALVINGS = 20
_WINDING_DOUBLINGS = 4
_STABILITY_TOL = 1e-5


def _sign(x):
    return 1 if x > 0 else (-1 if x < 0 else 0)


class ZeroRecord(ImmutableRecord):
    """A located zero of F

    index is sign(det_jac) for nondegenerate zeros and None while unknown.
    """
    __slots__ = ['z', 'residual', 'det_jac', 'nondegenerate', 'index']

    def __init__(self, z, residual, det_jac, nondegenerate, index=None):
        self._set(z=z, residual=float(residual), det_jac=float(det_jac),
                  nondegenerate=bool(nondegenerate), index=index)

    def with_index(self, index):
        return ZeroRecord(self.z, self.residual, self.det_jac, self.nondegenerate, index)

    @property
    def point(self):
        return self.z

    def to_dict(self):
        return {'z': self.z.z, 'residual': self.residual, 'det': self.det_jac,
                'nondegenerate': self.nondegenerate, 'index': self.index}


def _check_box(prob, box):
    if box is None:
        return prob.box()
    box = tuple((float(lo), float(hi)) for lo, hi in box)
    if len(box) != prob.k + prob.s:
        raise UsageError('box needs %d intervals; got %d' % (prob.k + prob.s, len(box)))
    for (lo, hi), (dlo, dhi) in zip(box, prob.domain):
        if not (dlo <= lo < hi <= dhi):
            raise UsageError('box [%g, %g] is not inside the domain [%g, %g]'
                             % (lo, hi, dlo, dhi))
    return box


def _grid_seeds(box, n):
    axes = [lo + (np.arange(n) + 0.5) * (hi - lo) / n for lo, hi in box]
    return [np.array(z) for z in itertools.product(*axes)]


def _in_box(z, box):
    return all(lo < v < hi for v, (lo, hi) in zip(z, box))


def _newton(prob, z, box, tol, maxiter):
    """Damped Newton on F from z; (z, residual) or ('left', None) or (None, None)"""
    try:
        F = eval_F(prob, z)
    except EvalDomainError:
        return None, None
    res = float(np.max(np.abs(F)))
    for _ in range(maxiter):
        try:
            J = jac_F(prob, z)
        except EvalDomainError:
            return None, None
        try:
            dz = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            dz = np.linalg.lstsq(J, -F, rcond=None)[0]
        if not np.all(np.isfinite(dz)):
            return None, None
        step = 1.0
        for _ in range(_MAX_HALVINGS):
            zn = z + step * dz
            if not _in_box(zn, box):
                step *= 0.5
                continue
            try:
                Fn = eval_F(prob, zn)
            except EvalDomainError:
                step *= 0.5
                continue
            res_n = float(np.max(np.abs(Fn)))
            if res_n <= res or res_n <= tol:
                break
            step *= 0.5
        else:
            if not _in_box(z + dz, box):
                return 'left', None
            if res <= tol:
                return z, res
            return None, None
        moved = step * float(np.max(np.abs(dz)))
        z, F, res = zn, Fn, res_n
        if res <= tol and moved <= 1e-13 * (1.0 + float(np.max(np.abs(z)))):
            return z, res
    if res <= 100 * tol:
        return z, res
    return None, None


def _dedup(points, radius):
    kept = []
    for z, res in sorted(points, key=lambda p: p[1]):
        if all(np.max(np.abs(z - w)) > radius for w, _ in kept):
            kept.append((z, res))
    return kept


def _zero_record(prob, z, res, params):
    J = jac_F(prob, z)
    det = float(np.linalg.det(J))
    nondeg = not is_degenerate(J, params.DEGEN_TOL)
    return ZeroRecord(PointKS.from_array(z, prob.k), res, det, nondeg,
                      _sign(det) if nondeg else None)


def _multistart(prob, box, grid_per_dim, tol, params):
    seeds = _grid_seeds(box, grid_per_dim)
    maxiter = params.ZERO_NEWTON_MAXITER
    results = parallel_map(lambda z: _newton(prob, z, box, tol, maxiter), seeds)
    left = sum(1 for z, _ in results if isinstance(z, str))
    found = [(z, res) for z, res in results if z is not None and not isinstance(z, str)]
    if left:
        log.warning('%d of %d Newton runs left the box', left, len(seeds))
    kept = _dedup(found, params.ZERO_DEDUP_RADIUS)
    kept.sort(key=lambda p: tuple(p[0]))
    return [_zero_record(prob, z, res, params) for z, res in kept], left


def find_zeros(prob, box=None, grid_per_dim=None, newton_tol=None, params=None):
    """Zeros of F in the box from multistart Newton on a cell-centered grid

    Zeros closer than ZERO_DEDUP_RADIUS are merged; the result is sorted
    lexicographically.
    """
    params = get_params(params)
    box = _check_box(prob, box)
    n = params.GRID_PER_DIM if grid_per_dim is None else int(grid_per_dim)
    tol = params.ZERO_NEWTON_TOL if newton_tol is None else newton_tol
    zeros, _ = _multistart(prob, box, n, tol, params)
    log.info('found %d zeros of F in %s', len(zeros), box)
    return zeros


def winding_number(fn, center, radius, points=None, params=None):
    """Winding number of a planar map fn around a circle

    The angle increments of fn along the circle are wrapped into (-pi, pi]
    and summed. The count is accepted when two successive resolutions give
    the same integer within WINDING_INTEGER_TOL.
    """
    params = get_params(params)
    n = params.WINDING_POINTS if points is None else int(points)
    center = np.asarray(center, dtype=float)
    previous = None
    for _ in range(_WINDING_DOUBLINGS + 1):
        theta = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
        vals = np.array([fn(center + radius * np.array([math.cos(a), math.sin(a)]))
                         for a in theta])
        if np.any(np.max(np.abs(vals), axis=1) == 0.0):
            raise AmbiguousWinding('map vanishes on the circle of radius %g' % radius,
                                   radius=radius)
        angles = np.arctan2(vals[:, 1], vals[:, 0])
        d = np.diff(np.append(angles, angles[0]))
        d = (d + math.pi) % (2 * math.pi) - math.pi
        turns = float(np.sum(d)) / (2 * math.pi)
        w = int(round(turns))
        if abs(turns - w) <= params.WINDING_INTEGER_TOL:
            if previous == w:
                return w
            previous = w
        else:
            previous = None
        n *= 2
    raise AmbiguousWinding('turning number did not settle on an integer (last %.6f)' % turns,
                           turns=turns, radius=radius)


def index_of(prob, zero, params=None, radius=None):
    """Index of F at an isolated zero"""
    params = get_params(params)
    if zero.nondegenerate:
        return _sign(zero.det_jac)
    if prob.k + prob.s != 2:
        raise DegenerateUnsupportedDim('degenerate zero in dimension %d; winding indices '
                                       'are planar only' % (prob.k + prob.s),
                                       z=zero.z.z.tolist())
    r = params.WINDING_RADIUS if radius is None else radius
    return winding_number(lambda z: eval_F(prob, z), zero.z.z, r, params=params)


class DegreeReport(ImmutableRecord):
    """total_degree is None when some index could not be resolved"""
    __slots__ = ['box', 'zeros', 'total_degree', 'boundary_min_norm', 'grid_per_dim',
                 'stable', 'newton_left_box']

    def __init__(self, box, zeros, total_degree, boundary_min_norm, grid_per_dim,
                 stable=None, newton_left_box=0):
        self._set(box=tuple(box), zeros=tuple(zeros), total_degree=total_degree,
                  boundary_min_norm=float(boundary_min_norm), grid_per_dim=grid_per_dim,
                  stable=stable, newton_left_box=newton_left_box)

    def to_dict(self):
        return {'box': [list(b) for b in self.box],
                'zeros': list(self.zeros),
                'total': self.total_degree,
                'boundary_min': self.boundary_min_norm,
                'grid_per_dim': self.grid_per_dim,
                'stable': self.stable,
                'newton_left_box': self.newton_left_box}


def boundary_min_norm(prob, box, params=None):
    """min of max|F| over a grid on the faces of the box

    Points where F is undefined are skipped.
    """
    params = get_params(params)
    m = params.BOUNDARY_SAMPLES
    axes = [np.linspace(lo, hi, m) for lo, hi in box]
    best = math.inf
    for i, (lo, hi) in enumerate(box):
        others = [axes[j] for j in range(len(box)) if j != i]
        for side in (lo, hi):
            for rest in itertools.product(*others):
                z = np.array(rest[:i] + (side,) + rest[i:])
                try:
                    v = float(np.max(np.abs(eval_F(prob, z))))
                except EvalDomainError:
                    continue
                best = min(best, v)
    return best


def _same_zero_sets(a, b):
    if len(a) != len(b):
        return False
    for za in a:
        if not any(np.max(np.abs(za.z.z - zb.z.z)) <= _STABILITY_TOL for zb in b):
            return False
    return True


def degree(prob, box=None, grid_per_dim=None, params=None, stability=True):
    """Brouwer degree of F on the box by index summation

    Raises BoundaryZero when F nearly vanishes on the boundary. With
    stability the zero search is repeated at twice the grid density and the
    report says whether the zero set agreed.
    """
    params = get_params(params)
    box = _check_box(prob, box)
    n = params.GRID_PER_DIM if grid_per_dim is None else int(grid_per_dim)
    bmin = boundary_min_norm(prob, box, params=params)
    if not bmin > params.BOUNDARY_TOL:
        raise BoundaryZero('F nearly vanishes on the boundary (min %.3e)' % bmin,
                           boundary_min_norm=bmin)
    zeros, left = _multistart(prob, box, n, params.ZERO_NEWTON_TOL, params)
    indexed = []
    for zero in zeros:
        if zero.index is None:
            try:
                zero = zero.with_index(index_of(prob, zero, params=params))
            except (DegenerateUnsupportedDim, AmbiguousWinding) as err:
                log.warning('index unresolved at %s: %s', zero.z.z.tolist(), err)
        indexed.append(zero)
    total = None
    if all(z.index is not None for z in indexed):
        total = sum(z.index for z in indexed)
    stable = None
    if stability:
        finer, _ = _multistart(prob, box, 2 * n, params.ZERO_NEWTON_TOL, params)
        stable = _same_zero_sets(zeros, finer)
        if not stable:
            log.warning('zero set changed from %d to %d zeros at grid %d',
                        len(zeros), len(finer), 2 * n)
    return DegreeReport(box, indexed, total, bmin, n, stable, left)


def _tangent_chart_field(prob, z, basis, w, params):
    """Psi in the tangent chart at z: basis^T Psi(point of M over z + basis w)"""
    d = basis.dot(w)
    p = z[:prob.k] + d[:prob.k]
    q = solve_constraint(prob, p, z[prob.k:] + d[prob.k:], params=params)
    return basis.T.dot(psi(prob, np.concatenate([p, q]), params=params).array)


def psi_index(prob, zero, params=None, fd_step=None):
    """Index of Psi at a zero, in the x-oriented tangent chart

    The tangent Jacobian basis^T dPsi basis comes from central differences
    along the basis. Degenerate zeros fall back to the sign change of the
    chart field (k = 1) or its winding number (k = 2).
    """
    params = get_params(params)
    z = as_array(zero)
    basis = tangent_basis(prob, z)
    h = params.FD_STEP if fd_step is None else fd_step
    k = prob.k
    cols = []
    for j in range(k):
        e = basis[:, j]
        plus = psi(prob, z + h * e, params=params).array
        minus = psi(prob, z - h * e, params=params).array
        cols.append(basis.T.dot(plus - minus) / (2 * h))
    jt = np.array(cols).T
    # det dF = det d2g det Phi, so a degenerate zero of F is one of Psi too
    known_degenerate = getattr(zero, 'nondegenerate', True) is False
    if (not known_degenerate and not is_degenerate(jt, params.DEGEN_TOL) and
            row_scale(jt) > 0):
        return _sign(np.linalg.det(jt))
    r = params.WINDING_RADIUS
    chart = lambda w: _tangent_chart_field(prob, z, basis, w, params)
    if k == 1:
        hi = _sign(chart(np.array([r]))[0])
        lo = _sign(chart(np.array([-r]))[0])
        if hi == 0 or lo == 0:
            raise DegenerateTangentZero('chart field vanishes at radius %g' % r, z=z.tolist())
        return (hi - lo) // 2
    if k == 2:
        try:
            return winding_number(chart, np.zeros(2), r, params=params)
        except AmbiguousWinding as err:
            raise DegenerateTangentZero(str(err), z=z.tolist())
    raise DegenerateTangentZero('degenerate zero of Psi with k = %d' % k, z=z.tolist())


def degree_psi(prob, box=None, zeros=None, params=None):
    """Degree of Psi on M within the box, as a sum of tangent-chart indices

    Zeros of Psi on M are the zeros of F, so the F zero search is reused.
    Only |degree_psi| = |degree| is meaningful across conventions.
    """
    params = get_params(params)
    if zeros is None:
        zeros = find_zeros(prob, box, params=params)
    return sum(psi_index(prob, zero, params=params) for zero in zeros)


class HomotopyStep(ImmutableRecord):
    __slots__ = ['rho', 'admissible', 'zero_count', 'total_degree', 'error']

    def __init__(self, rho, admissible, zero_count=None, total_degree=None, error=None):
        self._set(rho=float(rho), admissible=bool(admissible), zero_count=zero_count,
                  total_degree=total_degree, error=error)

    def to_dict(self):
        return {'rho': self.rho, 'admissible': self.admissible,
                'zero_count': self.zero_count, 'total': self.total_degree,
                'error': self.error}


def degree_along_homotopy(family, box, rhos, params=None, grid_per_dim=None):
    """Degree of the problems family(rho) on a fixed box

    Steps where F vanishes near the boundary are marked inadmissible. The
    second return value says whether all admissible steps share one degree.
    """
    steps = []
    for rho in rhos:
        prob = family(rho)
        try:
            rep = degree(prob, box, grid_per_dim=grid_per_dim, params=params,
                         stability=False)
        except BoundaryZero as err:
            steps.append(HomotopyStep(rho, False, error=err.to_dict()))
            continue
        except DaehError as err:
            steps.append(HomotopyStep(rho, True, error=err.to_dict()))
            continue
        steps.append(HomotopyStep(rho, True, len(rep.zeros), rep.total_degree))
    totals = set(s.total_degree for s in steps if s.admissible and s.error is None)
    return steps, len(totals) == 1 and None not in totals


__all__ = (
    'ZeroRecord',
    'find_zeros',
    'winding_number',
    'index_of',
    'DegreeReport',
    'boundary_min_norm',
    'degree',
    'psi_index',
    'degree_psi',
    'HomotopyStep',
    'degree_along_homotopy',
)
