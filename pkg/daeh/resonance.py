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

"""Linearization at a zero of F and T-resonance

At a zero (p0, q0) the reduced linearization is

    Phi = d1f - d2f d2g^-1 d1g,

and the zero is T-resonant when x' = Phi x has a nonzero T-periodic
solution, that is when some eigenvalue of Phi equals 2 n pi i / T. Note
det dF = det d2g det Phi.
"""

from __future__ import absolute_import, division, print_function

import logging
import math

import numpy as np
import scipy.integrate
import scipy.linalg

from daeh.core import get_params, MeanNotOne, StiffFailure
from daeh.core.linalg import eigenvalues, is_degenerate, solve_block
from daeh.core.model import PointKS, as_array, jac_F
from daeh.core.serialize import ImmutableRecord

log = logging.getLogger(__name__)

# verdict tolerance on the eigenvalue 1 of a period map
_UNIT_EIGENVALUE_TOL = 1e-6


def phi_matrix(prob, zero, params=None):
    """Phi(p0, q0) = d1f - d2f d2g^-1 d1g from the AD blocks"""
    params = get_params(params)
    z = as_array(zero)
    _, d1f, d2f = prob.f_blocks(z)
    _, d1g, d2g = prob.g_blocks(z)
    return d1f - d2f.dot(solve_block(d2g, d1g, params.SINGULAR_TOL, 'd2g'))


class ResonanceReport(ImmutableRecord):
    """Spectrum of Phi at a zero and the T-resonance verdict

    matched_n lists the n with |mu - 2 n pi i / T| <= RES_TOL for some
    eigenvalue mu; marginal flags near misses within MARGINAL_TOL.
    """
    __slots__ = ['zero', 'phi', 'eigenvalues', 'resonant', 'matched_n', 'marginal',
                 'det_jac', 'det_d2g', 'det_identity_residual', 'nondegenerate', 'T']

    def __init__(self, **fields):
        self._set(**fields)

    def to_dict(self):
        return {'zero': self.zero.z,
                'phi': self.phi,
                'eigenvalues': self.eigenvalues,
                'resonant': self.resonant,
                'matched_n': self.matched_n,
                'marginal': self.marginal,
                'det_jac': self.det_jac,
                'det_d2g': self.det_d2g,
                'det_residual': self.det_identity_residual,
                'nondegenerate': self.nondegenerate}


def resonance_orders(mus, T, bound, res_tol, marginal_tol):
    """(matched n, marginal) for the spectrum mus against 2 n pi i / T

    n ranges over |n| <= ceil(bound T / 2 pi) + 1 where bound is at least the
    spectral radius.
    """
    nmax = int(math.ceil(bound * T / (2 * math.pi))) + 1
    matched = set()
    marginal = False
    for mu in mus:
        for n in range(-nmax, nmax + 1):
            dist = abs(mu - 2j * math.pi * n / T)
            if dist <= res_tol:
                matched.add(n)
            elif dist <= marginal_tol:
                marginal = True
    return sorted(matched), marginal


def is_T_resonant(prob, zero, T=None, params=None):
    """Resonance report of the zero for the period T (default prob.T)"""
    params = get_params(params)
    T = prob.T if T is None else float(T)
    z = as_array(zero)
    phi = phi_matrix(prob, z, params=params)
    mus = eigenvalues(phi)
    matched, marginal = resonance_orders(mus, T, np.linalg.norm(phi, 2),
                                         params.RES_TOL, params.MARGINAL_TOL)
    if marginal and not matched:
        log.warning('zero %s is within %g of resonance', z.tolist(), params.MARGINAL_TOL)
    J = jac_F(prob, z)
    det_jac = float(np.linalg.det(J))
    _, _, d2g = prob.g_blocks(z)
    det_d2g = float(np.linalg.det(d2g))
    det_res = abs(det_jac - det_d2g * float(np.linalg.det(phi))) / (1.0 + abs(det_jac))
    if det_res > 1e-8:
        log.warning('det dF differs from det d2g det Phi by %.3e', det_res)
    return ResonanceReport(zero=PointKS.from_array(z, prob.k), phi=phi, eigenvalues=mus,
                           resonant=bool(matched), matched_n=matched, marginal=marginal,
                           det_jac=det_jac, det_d2g=det_d2g,
                           det_identity_residual=det_res,
                           nondegenerate=not is_degenerate(J, params.DEGEN_TOL), T=T)


def has_unit_eigenvalue(m, tol=_UNIT_EIGENVALUE_TOL):
    """Whether ker(m - I) is nontrivial, judged on the spectrum"""
    return any(abs(mu - 1.0) <= tol for mu in eigenvalues(m))


def linear_monodromy(prob, phi, T=None, params=None):
    """Period map of x' = a(t) Phi x, from the k x k matrix ODE over [0, T]"""
    params = get_params(params)
    T = prob.T if T is None else float(T)
    k = phi.shape[0]

    def rhs(t, w):
        return (prob.eval_a(t) * phi.dot(w.reshape(k, k))).reshape(-1)

    sol = scipy.integrate.solve_ivp(rhs, (0.0, T), np.eye(k).reshape(-1), method='DOP853',
                                    rtol=1e-12, atol=1e-14)
    if not sol.success:
        raise StiffFailure('matrix ODE failed: %s' % sol.message)
    return sol.y[:, -1].reshape(k, k)


class PeriodMapComparison(ImmutableRecord):
    """Period map of x' = a(t) Phi x against exp(T Phi)"""
    __slots__ = ['monodromy', 'exp_T_phi', 'residual', 'resonant_time_dependent',
                 'resonant_autonomous', 'verdicts_agree']

    def __init__(self, **fields):
        self._set(**fields)

    def to_dict(self):
        return {'monodromy': self.monodromy,
                'exp_T_phi': self.exp_T_phi,
                'residual': self.residual,
                'resonant_time_dependent': self.resonant_time_dependent,
                'resonant_autonomous': self.resonant_autonomous,
                'verdicts_agree': self.verdicts_agree}


def compare_period_maps(prob, zero, T=None, params=None):
    """Compare the resonance of x' = a(t) Phi x and x' = Phi x at a zero

    Requires a of mean 1. Then the period map exp(Phi int_0^T a) equals
    exp(T Phi); the residual is |monodromy - exp(T Phi)| / (1 + |exp(T Phi)|)
    in the Frobenius norm.
    """
    params = get_params(params)
    T = prob.T if T is None else float(T)
    if abs(prob.a_mean - 1.0) > params.MEAN_ONE_TOL:
        raise MeanNotOne('a has mean %.12g, not 1' % prob.a_mean, a_mean=prob.a_mean)
    phi = phi_matrix(prob, zero, params=params)
    mono = linear_monodromy(prob, phi, T, params=params)
    expo = scipy.linalg.expm(T * phi)
    residual = float(np.linalg.norm(mono - expo) / (1.0 + np.linalg.norm(expo)))
    left = has_unit_eigenvalue(mono)
    right = has_unit_eigenvalue(expo)
    return PeriodMapComparison(monodromy=mono, exp_T_phi=expo, residual=residual,
                               resonant_time_dependent=left, resonant_autonomous=right,
                               verdicts_agree=left == right)


__all__ = (
    'phi_matrix',
    'eigenvalues',
    'ResonanceReport',
    'resonance_orders',
    'is_T_resonant',
    'has_unit_eigenvalue',
    'linear_monodromy',
    'PeriodMapComparison',
    'compare_period_maps',
)
