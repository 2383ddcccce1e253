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

"""Separated-variable DAE problems

A problem is

    x' = a(t) f(x, y) + lambda h(t, x, y),    g(x, y) = 0

on an open box U of R^k x R^s, with a and h T-periodic in t and a of nonzero
mean. Unperturbed problems are the lambda = 0 case. Problems are immutable
and are read from (and written to) the key=value format described in
doc/problem-format.md; the built-in problems are defined in that format.
"""

from __future__ import absolute_import, division, print_function

import io
import logging
import math
import re

import numpy as np
import scipy.integrate

from daeh.core import (get_params, EvalDomainError, InvalidProblemError,
                       ProblemFormatError, UnknownProblemError, DaehError)
from daeh.core.expr import Expr, parse
from daeh.core.serialize import ImmutableRecord

log = logging.getLogger(__name__)

# quadrature splits [t0, t1] into this many pieces before adapting
_QUAD_PIECES = 16


def integrate_signal(e, t0, t1, tol=1e-10, var='t'):
    """Integral of the scalar expression e(t) over [t0, t1]

    Adaptive Gauss-Kronrod (QUADPACK) on equal pieces so that kinks such as
    |cos t| are bracketed early.
    """
    if t1 == t0:
        return 0.0
    fn = lambda t: e.eval({var: t})
    edges = np.linspace(t0, t1, _QUAD_PIECES + 1)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        value, _ = scipy.integrate.quad(fn, lo, hi, epsabs=tol / _QUAD_PIECES,
                                        epsrel=1e-13, limit=200)
        total += value
    return total


class PointKS(ImmutableRecord):
    """A point (p, q) of R^k x R^s"""
    __slots__ = ['p', 'q']

    def __init__(self, p, q):
        p = np.array(p, dtype=float).reshape(-1)
        q = np.array(q, dtype=float).reshape(-1)
        p.flags.writeable = False
        q.flags.writeable = False
        self._set(p=p, q=q)

    @classmethod
    def from_array(cls, z, k):
        z = np.asarray(z, dtype=float).reshape(-1)
        return cls(z[:k], z[k:])

    @property
    def z(self):
        return np.concatenate([self.p, self.q])

    def to_dict(self):
        return {'p': self.p, 'q': self.q}


def as_array(z):
    """Concatenated state of a PointKS, ManifoldPoint or array"""
    if isinstance(z, PointKS):
        return z.z
    inner = getattr(z, 'point', None)
    if isinstance(inner, PointKS):
        return inner.z
    return np.asarray(z, dtype=float).reshape(-1)


def capped_box(domain, cap):
    """Replace infinite bounds by +-cap"""
    box = []
    for lo, hi in domain:
        lo = -cap if math.isinf(lo) and lo < 0 else lo
        hi = cap if math.isinf(hi) and hi > 0 else hi
        box.append((float(lo), float(hi)))
    return tuple(box)


def in_box(z, box):
    """Strict membership in an open box"""
    for v, (lo, hi) in zip(z, box):
        if not (lo < v < hi):
            return False
    return True


def _check_names(exprs, allowed, what):
    for e in exprs:
        extra = e.free_vars - allowed
        if extra:
            raise InvalidProblemError('%s uses unknown variables %s in %r'
                                      % (what, ', '.join(sorted(extra)), str(e)),
                                      variables=sorted(extra))


class DaeProblem(ImmutableRecord):
    """The full problem statement

    f, g, h are tuples of Expr; a is an Expr in t; domain is a tuple of
    (lo, hi) pairs for x_names + y_names, bounds may be infinite.
    """
    __slots__ = ['name', 'k', 's', 'x_names', 'y_names', 'f', 'g', 'h', 'a',
                 'T', 'domain', 'constants', 'a_mean', 'box_cap',
                 '_index', '_names']

    def __init__(self, k, s, f, g, h, a, T, domain=None, x_names=None,
                 y_names=None, name='problem', constants=None, box_cap=None,
                 params=None):
        params = get_params(params)
        k = int(k)
        s = int(s)
        if k < 1 or s < 1:
            raise InvalidProblemError('dimensions must be positive; got k=%d s=%d' % (k, s))
        if x_names is None:
            x_names = ('x',) if k == 1 else tuple('x%d' % (i + 1) for i in range(k))
        if y_names is None:
            y_names = ('y',) if s == 1 else tuple('y%d' % (i + 1) for i in range(s))
        x_names = tuple(x_names)
        y_names = tuple(y_names)
        if len(x_names) != k or len(y_names) != s:
            raise InvalidProblemError('expected %d x names and %d y names' % (k, s))
        if len(set(x_names + y_names + ('t',))) != k + s + 1:
            raise InvalidProblemError('variable names must be distinct and differ from t')
        f = tuple(f)
        g = tuple(g)
        h = tuple(h)
        if len(f) != k or len(h) != k or len(g) != s:
            raise InvalidProblemError('expected %d f, %d h and %d g expressions; got %d, %d, %d'
                                      % (k, k, s, len(f), len(h), len(g)))
        state = set(x_names + y_names)
        _check_names(f, state, 'f')
        _check_names(g, state, 'g')
        _check_names(h, state | set(['t']), 'h')
        _check_names([a], set(['t']), 'a')
        T = float(T)
        if not T > 0:
            raise InvalidProblemError('period must be positive; got %r' % T)
        if domain is None:
            domain = ((-math.inf, math.inf),) * (k + s)
        domain = tuple((float(lo), float(hi)) for lo, hi in domain)
        if len(domain) != k + s or any(not lo < hi for lo, hi in domain):
            raise InvalidProblemError('domain must be %d nonempty intervals' % (k + s))
        if box_cap is None:
            box_cap = params.BOX_CAP
        names = x_names + y_names
        self._set(name=name, k=k, s=s, x_names=x_names, y_names=y_names,
                  f=f, g=g, h=h, a=a, T=T, domain=domain,
                  constants=dict(constants or {}), box_cap=float(box_cap),
                  _names=names,
                  _index=dict((n, i) for i, n in enumerate(names)),
                  a_mean=None)
        self._validate(params)

    def _validate(self, params):
        ts = np.linspace(0.0, self.T, params.PERIODICITY_SAMPLES, endpoint=False)
        tol = params.PERIODICITY_TOL
        for t in ts:
            if abs(self.eval_a(t) - self.eval_a(t + self.T)) > tol:
                raise InvalidProblemError('a is not %g-periodic near t=%g' % (self.T, t), t=t)
        rng = np.random.default_rng(0)
        box = self.box()
        lo = np.array([b[0] for b in box])
        hi = np.array([b[1] for b in box])
        points = [0.5 * (lo + hi)] + [lo + (hi - lo) * rng.random(len(lo)) for _ in range(2)]
        for z in points:
            for t in ts:
                try:
                    h0 = self.eval_h(t, z)
                    h1 = self.eval_h(t + self.T, z)
                except EvalDomainError:
                    break
                if np.max(np.abs(h0 - h1)) > tol:
                    raise InvalidProblemError('h is not %g-periodic in t near t=%g' % (self.T, t),
                                              t=t)
        mean = integrate_signal(self.a, 0.0, self.T, params.QUAD_TOL) / self.T
        if not abs(mean) > 1e-12:
            raise InvalidProblemError('a has zero mean over a period')
        object.__setattr__(self, 'a_mean', mean)

    def replace(self, **changes):
        """A copy with some fields replaced (revalidated)"""
        fields = dict(k=self.k, s=self.s, f=self.f, g=self.g, h=self.h, a=self.a,
                      T=self.T, domain=self.domain, x_names=self.x_names,
                      y_names=self.y_names, name=self.name,
                      constants=self.constants, box_cap=self.box_cap)
        fields.update(changes)
        return DaeProblem(**fields)

    @property
    def names(self):
        return self._names

    def box(self, cap=None):
        return capped_box(self.domain, self.box_cap if cap is None else cap)

    def contains(self, z):
        return in_box(as_array(z), self.domain)

    def bindings(self, z, t=None):
        z = as_array(z)
        env = dict(zip(self._names, z.tolist()))
        if t is not None:
            env['t'] = float(t)
        return env

    def eval_a(self, t):
        return self.a.eval({'t': float(t)})

    def eval_f(self, z):
        env = self.bindings(z)
        return np.array([e.eval(env) for e in self.f])

    def eval_g(self, z):
        env = self.bindings(z)
        return np.array([e.eval(env) for e in self.g])

    def eval_h(self, t, z):
        env = self.bindings(z, t)
        return np.array([e.eval(env) for e in self.h])

    def _jacobian_rows(self, exprs, env):
        n = self.k + self.s
        values = np.empty(len(exprs))
        jac = np.zeros((len(exprs), n))
        for i, e in enumerate(exprs):
            v, grad = e.value_and_grad(env, self._index)
            values[i] = v
            if grad is not None:
                jac[i, :] = grad
        return values, jac

    def f_blocks(self, z):
        """f(z), d1f(z), d2f(z)"""
        values, jac = self._jacobian_rows(self.f, self.bindings(z))
        return values, jac[:, :self.k], jac[:, self.k:]

    def g_blocks(self, z):
        """g(z), d1g(z), d2g(z)"""
        values, jac = self._jacobian_rows(self.g, self.bindings(z))
        return values, jac[:, :self.k], jac[:, self.k:]

    def to_dict(self):
        return {'name': self.name,
                'k': self.k,
                's': self.s,
                'x_names': list(self.x_names),
                'y_names': list(self.y_names),
                'f': [str(e) for e in self.f],
                'g': [str(e) for e in self.g],
                'h': [str(e) for e in self.h],
                'a': str(self.a),
                'T': self.T,
                'a_mean': self.a_mean,
                'domain': [list(b) for b in self.domain],
                'box_cap': self.box_cap}


def eval_F(prob, z):
    """F(z) = (f(z), g(z))"""
    env = prob.bindings(z)
    return np.array([e.eval(env) for e in prob.f + prob.g])


def jac_F(prob, z):
    """Jacobian of F, rows (f, g), columns (x, y), from forward-mode AD"""
    return prob._jacobian_rows(prob.f + prob.g, prob.bindings(z))[1]


# Problem files

_SECTIONS = ('dims', 'params', 'f', 'g', 'h', 'a', 'domain', 'period')
_SECTION_RE = re.compile(r'^\[([A-Za-z_]+)\]$')


def _constant(text, constants, where):
    try:
        e = parse(text).substitute(constants)
        if e.free_vars:
            raise ProblemFormatError('%s: %r is not constant (free: %s)'
                                     % (where, text, ', '.join(sorted(e.free_vars))))
        return e.eval({})
    except ProblemFormatError:
        raise
    except DaehError as err:
        raise ProblemFormatError('%s: %s' % (where, err), line=where)


def _bound(text, constants, where):
    t = text.strip().lower()
    if t in ('inf', '+inf'):
        return math.inf
    if t == '-inf':
        return -math.inf
    return _constant(text, constants, where)


def parse_problem(text, overrides=None, name=None, params=None):
    """Build a DaeProblem from problem-file text

    overrides replaces values of the [params] section before substitution.
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
            sec = m.group(1).lower()
            if sec not in _SECTIONS:
                raise ProblemFormatError('line %d: unknown section [%s]' % (lineno, sec),
                                         line=lineno)
            if sec in sections:
                raise ProblemFormatError('line %d: duplicate section [%s]' % (lineno, sec),
                                         line=lineno)
            current = sections[sec] = []
            continue
        if '=' not in line:
            raise ProblemFormatError('line %d: expected key = value' % lineno, line=lineno)
        key, value = line.split('=', 1)
        current.append((key.strip(), value.strip(), lineno))

    meta = dict((key, value) for key, value, _ in top)
    for sec in ('dims', 'f', 'g', 'a', 'period'):
        if sec not in sections:
            raise ProblemFormatError('missing section [%s]' % sec)

    constants = {'pi': Expr.const(math.pi)}
    overrides = dict(overrides or {})
    for key, value, lineno in sections.get('params', []):
        if key in overrides:
            v = float(overrides.pop(key))
        else:
            v = _constant(value, constants, 'line %d' % lineno)
        constants[key] = Expr.const(v)
    if overrides:
        raise ProblemFormatError('unknown parameters %s' % ', '.join(sorted(overrides)),
                                 unknown=sorted(overrides))

    dims = dict((key, (value, lineno)) for key, value, lineno in sections['dims'])
    try:
        k = int(dims['k'][0])
        s = int(dims['s'][0])
    except (KeyError, ValueError):
        raise ProblemFormatError('[dims] needs integer k and s')
    x_names = None
    y_names = None
    if 'x' in dims:
        x_names = tuple(n.strip() for n in dims['x'][0].split(','))
    if 'y' in dims:
        y_names = tuple(n.strip() for n in dims['y'][0].split(','))

    def exprs(sec):
        out = []
        for key, value, lineno in sections.get(sec, []):
            try:
                out.append(parse(value).substitute(constants))
            except DaehError as err:
                raise ProblemFormatError('line %d: %s' % (lineno, err), line=lineno,
                                         cause=err.to_dict())
        return out

    f = exprs('f')
    g = exprs('g')
    h = exprs('h') if 'h' in sections else [Expr.const(0.0)] * k
    a_list = exprs('a')
    if len(a_list) != 1:
        raise ProblemFormatError('[a] needs exactly one expression')
    period = sections['period']
    if len(period) != 1:
        raise ProblemFormatError('[period] needs exactly one entry')
    T = _constant(period[0][1], constants, 'line %d' % period[0][2])

    names_x = x_names or (('x',) if k == 1 else tuple('x%d' % (i + 1) for i in range(k)))
    names_y = y_names or (('y',) if s == 1 else tuple('y%d' % (i + 1) for i in range(s)))
    bounds = dict((n, (-math.inf, math.inf)) for n in names_x + names_y)
    for key, value, lineno in sections.get('domain', []):
        if key not in bounds:
            raise ProblemFormatError('line %d: unknown variable %r in [domain]' % (lineno, key),
                                     line=lineno)
        parts = value.split(',')
        if len(parts) != 2:
            raise ProblemFormatError('line %d: expected lo, hi' % lineno, line=lineno)
        where = 'line %d' % lineno
        bounds[key] = (_bound(parts[0], constants, where), _bound(parts[1], constants, where))
    box_cap = None
    if 'box_cap' in meta:
        box_cap = _constant(meta['box_cap'], constants, 'box_cap')
    return DaeProblem(k, s, f, g, h, a_list[0], T,
                      domain=[bounds[n] for n in names_x + names_y],
                      x_names=names_x, y_names=names_y,
                      name=name or meta.get('name', 'problem'),
                      constants=dict((n, c.eval({})) for n, c in constants.items()),
                      box_cap=box_cap, params=params)


def load_problem(path, overrides=None, params=None):
    """Read a problem file (UTF-8)"""
    with io.open(path, 'r', encoding='utf-8') as fd:
        return parse_problem(fd.read(), overrides=overrides, params=params)


def _fmt_bound(v):
    if math.isinf(v):
        return 'inf' if v > 0 else '-inf'
    return repr(float(v))


def dump_problem(prob):
    """Problem-file text for prob; constants are already substituted"""
    lines = ['name = %s' % prob.name, 'box_cap = %r' % prob.box_cap, '',
             '[dims]', 'k = %d' % prob.k, 's = %d' % prob.s,
             'x = %s' % ', '.join(prob.x_names), 'y = %s' % ', '.join(prob.y_names), '',
             '[f]']
    lines += ['f%d = %s' % (i + 1, e) for i, e in enumerate(prob.f)]
    lines += ['', '[g]']
    lines += ['g%d = %s' % (i + 1, e) for i, e in enumerate(prob.g)]
    lines += ['', '[h]']
    lines += ['h%d = %s' % (i + 1, e) for i, e in enumerate(prob.h)]
    lines += ['', '[a]', 'a = %s' % prob.a, '', '[domain]']
    lines += ['%s = %s, %s' % (n, _fmt_bound(lo), _fmt_bound(hi))
              for n, (lo, hi) in zip(prob.names, prob.domain)]
    lines += ['', '[period]', 'T = %r' % prob.T, '']
    return '\n'.join(lines)


# Moving constraints and the b(t) change of variables

class MovingConstraintProblem(ImmutableRecord):
    """x' = (a(t)/b(t)) x + lambda h(t, x, y),  g(b(t) x, y) = 0

    g is given as a function of the scaled variable b(t) x; domain is the box
    of the scaled variables.
    """
    __slots__ = ['k', 's', 'a', 'g', 'h', 'T', 'domain', 'x_names', 'y_names', 'name']

    def __init__(self, a, g, h, T, k=1, s=1, domain=None, x_names=None, y_names=None,
                 name='moving-constraint'):
        if x_names is None:
            x_names = ('x',) if k == 1 else tuple('x%d' % (i + 1) for i in range(k))
        if y_names is None:
            y_names = ('y',) if s == 1 else tuple('y%d' % (i + 1) for i in range(s))
        self._set(k=k, s=s, a=a, g=tuple(g), h=tuple(h), T=float(T), domain=domain,
                  x_names=tuple(x_names), y_names=tuple(y_names), name=name)


def _check_b(b, T, params):
    ts = np.linspace(0.0, T, params.PERIODICITY_SAMPLES, endpoint=False)
    for t in ts:
        bt = b.eval({'t': t})
        if not bt > 0:
            raise InvalidProblemError('b is not positive at t=%g (b=%g)' % (t, bt), t=t)
        if abs(bt - b.eval({'t': t + T})) > params.PERIODICITY_TOL:
            raise InvalidProblemError('b is not %g-periodic near t=%g' % (T, t), t=t)


def fix_moving_constraint(b, raw, params=None):
    """Fixed-constraint form of a moving-constraint problem

    With xs = b(t) x the problem becomes
        xs' = ((b'(t) + a(t)) / b(t)) xs + lambda b(t) h(t, xs / b(t), y),
        g(xs, y) = 0,
    a separated-variable problem with f(xs, y) = xs.
    """
    params = get_params(params)
    _check_b(b, raw.T, params)
    bdot = b.derivative('t')
    drift = (bdot + raw.a) / b
    scaled = dict((n, Expr.var(n) / b) for n in raw.x_names)
    f = [Expr.var(n) for n in raw.x_names]
    h = [b * e.substitute(scaled) for e in raw.h]
    prob = DaeProblem(raw.k, raw.s, f, raw.g, h, drift, raw.T, domain=raw.domain,
                      x_names=raw.x_names, y_names=raw.y_names, name=raw.name,
                      params=params)
    raw_mean = integrate_signal(raw.a / b, 0.0, raw.T, params.QUAD_TOL) / raw.T
    if abs(prob.a_mean - raw_mean) > 1e-8:
        raise InvalidProblemError('mean of the transformed drift %.12g differs from mean of '
                                  'a/b %.12g' % (prob.a_mean, raw_mean))
    return prob


def unfix_moving_constraint(b, times, states, k):
    """Undo the change of variables on sampled states: x = xs / b(t)"""
    states = np.array(states, dtype=float)
    for i, t in enumerate(times):
        states[i, :k] /= b.eval({'t': float(t)})
    return states


def moving_constraint_rhs(b, raw, lam, t, x, y):
    """Right-hand side of the original equation (a/b) x + lambda h(t, x, y)"""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    env = dict(zip(raw.x_names, x.tolist()))
    env.update(zip(raw.y_names, y.tolist()))
    env['t'] = float(t)
    ab = raw.a.eval(env) / b.eval(env)
    return ab * x + lam * np.array([e.eval(env) for e in raw.h])


# Built-in problems

_REACTOR = """
name = reactor

[dims]
k = 2
s = 1
x = x1, x2
y = y

[params]
k1 = 0.5
k2 = 2
k3 = 0.5
k4 = 1
C0 = 2
T0 = 1
Tc = 1
T = 1
alpha = 0.5

[f]
f1 = k1*(C0 - x1) - y
f2 = k1*(T0 - x2) + k2*y - k3*(x2 - Tc)

[g]
g1 = y - k3*exp(-k4*x1/x2)

[h]
h1 = cos(2*pi*t/T)
h2 = cos(2*pi*t/T)

[a]
a = 1 + alpha*sin(2*pi*t/T)

[domain]
x2 = 0, inf

[period]
T = T
"""

_THREE_ZEROS = """
name = example-4-6

[dims]
k = 1
s = 1

[params]
eps = 0.5
T = 1
B = 10

[f]
f1 = x*y^2 - x^2*y

[g]
g1 = y - x^3 + eps*y^3

[h]
h1 = cos(2*pi*t/T)

[a]
a = 1 + 0.5*sin(2*pi*t/T)

[domain]
x = -1.5, B
y = -1.5, B

[period]
T = T
"""

# degree homotopy of example-4-6 from rho = 0 (the problem) to rho = 1
_THREE_ZEROS_HOMOTOPY = """
name = example-4-6-homotopy

[dims]
k = 1
s = 1

[params]
eps = 0.5
rho = 0
T = 1
B = 10

[f]
f1 = y^2*x - x^2*y

[g]
g1 = y - x^3 + (1 - rho)*eps*y^3 - rho

[h]
h1 = cos(2*pi*t/T)

[a]
a = 1 + 0.5*sin(2*pi*t/T)

[domain]
x = -1.5, B
y = -1.5, B

[period]
T = T
"""

BUILTIN_TEXTS = {
    'reactor': _REACTOR,
    'example-4-6': _THREE_ZEROS,
    'example-4-6-homotopy': _THREE_ZEROS_HOMOTOPY,
}

BUILTIN_NAMES = ('example-3-7', 'reactor', 'example-4-6', 'example-4-6-homotopy')

# descriptive names accepted in place of the canonical ids
BUILTIN_ALIASES = {
    'moving-constraint': 'example-3-7',
    'three-zeros': 'example-4-6',
    'three-zeros-homotopy': 'example-4-6-homotopy',
}


def moving_constraint_parts():
    """(b, raw) of the scalar moving-constraint example with T = 2 pi"""
    b = parse('2 + sin(t)')
    raw = MovingConstraintProblem(a=parse('abs(cos(t))'),
                                  g=[parse('y^5 + y^3 + y + x^3')],
                                  h=[parse('cos(t)')],
                                  T=2 * math.pi,
                                  domain=((-1.0, math.inf), (-math.inf, math.inf)),
                                  name='example-3-7')
    return b, raw


def builtin(name, overrides=None, params=None):
    """One of the built-in problems by id or alias"""
    name = BUILTIN_ALIASES.get(name, name)
    if name == 'example-3-7':
        if overrides:
            raise ProblemFormatError('example-3-7 has no parameters')
        b, raw = moving_constraint_parts()
        return fix_moving_constraint(b, raw, params=params)
    try:
        text = BUILTIN_TEXTS[name]
    except KeyError:
        raise UnknownProblemError('unknown builtin %r; expected one of %s'
                                  % (name, ', '.join(BUILTIN_NAMES + tuple(BUILTIN_ALIASES))),
                                  name=name)
    return parse_problem(text, overrides=overrides, params=params)


def reactor_det(prob, z):
    """Closed form of det dF for the reactor problem

        det dF = (k1 - eta)(k1 + k3) - k1 k2 eta x1 / x2,
        eta = k3 k4 exp(-k4 x1 / x2) / x2
    """
    c = prob.constants
    x1, x2 = as_array(z)[:2]
    eta = c['k3'] * c['k4'] * math.exp(-c['k4'] * x1 / x2) / x2
    return (c['k1'] - eta) * (c['k1'] + c['k3']) - c['k1'] * c['k2'] * eta * x1 / x2


__all__ = (
    'integrate_signal',
    'PointKS',
    'as_array',
    'capped_box',
    'in_box',
    'DaeProblem',
    'eval_F',
    'jac_F',
    'parse_problem',
    'load_problem',
    'dump_problem',
    'MovingConstraintProblem',
    'fix_moving_constraint',
    'unfix_moving_constraint',
    'moving_constraint_rhs',
    'BUILTIN_NAMES',
    'BUILTIN_ALIASES',
    'builtin',
    'moving_constraint_parts',
    'reactor_det',
)
