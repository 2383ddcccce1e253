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

"""Guarded dense linear algebra for small matrices: solves, kernels, spectra"""

from __future__ import absolute_import, division, print_function

import cmath

import numpy as np
import scipy.linalg

from daeh.core import NoConvergence, SingularBlock


def row_scale(m):
    """Product of the Euclidean row norms of m"""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    return float(np.prod(np.linalg.norm(m, axis=1)))


def scaled_det(m):
    """Determinant of m with every row normalized to unit length

    Zero when m has a zero row.
    """
    m = np.atleast_2d(np.asarray(m, dtype=float))
    norms = np.linalg.norm(m, axis=1)
    if np.any(norms == 0.0):
        return 0.0
    return float(np.linalg.det(m / norms[:, None]))


def is_degenerate(m, tol):
    """|det m| <= tol * (product of row norms)"""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    return not abs(np.linalg.det(m)) > tol * row_scale(m)


def solve_block(m, rhs, tol, what='block'):
    """Solve m x = rhs by LU with partial pivoting

    Raises SingularBlock when the row-scaled determinant is below tol.
    """
    m = np.atleast_2d(np.asarray(m, dtype=float))
    sdet = scaled_det(m)
    if not abs(sdet) >= tol:
        raise SingularBlock('singular %s: scaled det %.3e' % (what, sdet),
                            scaled_det=sdet, what=what)
    lu_piv = scipy.linalg.lu_factor(m, check_finite=False)
    return scipy.linalg.lu_solve(lu_piv, np.asarray(rhs, dtype=float), check_finite=False)


def kernel_basis(d):
    """Orthonormal basis (columns) of ker d for a full row rank s x n matrix d

    Taken from the complete QR factorization of d^T.
    """
    d = np.atleast_2d(np.asarray(d, dtype=float))
    s = d.shape[0]
    q, _ = np.linalg.qr(d.T, mode='complete')
    return q[:, s:]


def eigenvalues(m, tol=1e-8):
    """Spectrum of a small real matrix, sorted by (real, imag)

    Sizes 1 and 2 use the closed form. Larger matrices go through LAPACK
    (Hessenberg reduction and shifted QR); every returned pair must satisfy
    |m v - mu v| <= tol |m| or NoConvergence is raised.
    """
    m = np.atleast_2d(np.asarray(m, dtype=float))
    n = m.shape[0]
    if m.shape != (n, n) or n == 0:
        raise ValueError('expected a nonempty square matrix; got shape %r' % (m.shape,))
    if n == 1:
        mus = [complex(m[0, 0])]
    elif n == 2:
        half_tr = 0.5 * (m[0, 0] + m[1, 1])
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        root = cmath.sqrt(half_tr * half_tr - det)
        mus = [complex(half_tr) + root, complex(half_tr) - root]
    else:
        try:
            w, v = np.linalg.eig(m)
        except np.linalg.LinAlgError as err:
            raise NoConvergence('eigenvalue iteration failed: %s' % err, size=n)
        scale = max(np.linalg.norm(m, 2), 1e-300)
        for i in range(n):
            err = np.linalg.norm(m.dot(v[:, i]) - w[i] * v[:, i])
            if err > tol * scale * max(np.linalg.norm(v[:, i]), 1.0):
                raise NoConvergence('eigenpair %d has backward error %.3e' % (i, err),
                                    size=n, backward_error=float(err))
        mus = [complex(mu) for mu in w]
    return sorted(mus, key=lambda c: (c.real, c.imag))


__all__ = (
    'row_scale',
    'scaled_det',
    'is_degenerate',
    'solve_block',
    'kernel_basis',
    'eigenvalues',
)
