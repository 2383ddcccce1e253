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

"""Scalar expressions with first-order forward-mode derivatives

Problem files define f, g, h and a as text in a small grammar (see
doc/grammar.md); every Jacobian in the package comes from eval_dual() on the
parsed trees.

>>> e = parse('y^5+y^3+y+x^3')
>>> sorted(e.free_vars)
['x', 'y']
>>> e.eval({'x': 1.0, 'y': 1.0})
4.0

Derivative conventions: d|u|/du is 0 at u = 0. A constant integral exponent
is evaluated by repeated multiplication and accepts any base; any other
exponent needs a positive base.
"""

from __future__ import absolute_import, division, print_function

import math
import re

from daeh.core import (ExprSyntaxError, UnknownFunctionError,
                       MissingBindingError, EvalDomainError)
from daeh.core.serialize import ImmutableRecord

FUNCTIONS = ('sin', 'cos', 'exp', 'ln', 'abs', 'sqrt')

# binding strength used by the printer; mirrors the grammar levels
_PREC_ADD = 1
_PREC_MUL = 2
_PREC_UNARY = 3
_PREC_POW = 4
_PREC_ATOM = 5

_BINOP_PREC = {'+': _PREC_ADD, '-': _PREC_ADD,
               '*': _PREC_MUL, '/': _PREC_MUL,
               '^': _PREC_POW}


def _byte_offset(source, index):
    return len(source[:index].encode('utf-8'))


def _domain_error(node, msg):
    return EvalDomainError('%s at offset %d in %r' % (msg, node.offset, node.to_text()),
                           offset=node.offset, node=node.to_text())


def _ipow(x, n):
    """x**n for integer n by repeated squaring"""
    if n < 0:
        if x == 0.0:
            raise ZeroDivisionError
        return 1.0 / _ipow(x, -n)
    result = 1.0
    base = x
    while n:
        if n & 1:
            result *= base
        base *= base
        n >>= 1
    return result


def _gadd(ga, gb):
    if ga is None:
        return gb
    if gb is None:
        return ga
    return [a + b for a, b in zip(ga, gb)]


def _gaxpy(ca, ga, cb, gb):
    """ca*ga + cb*gb with None as the zero gradient"""
    if ga is None:
        if gb is None:
            return None
        return [cb * b for b in gb]
    if gb is None:
        return [ca * a for a in ga]
    return [ca * a + cb * b for a, b in zip(ga, gb)]


def _gscale(c, g):
    if g is None:
        return None
    return [c * a for a in g]


class Node(ImmutableRecord):
    """Base class of expression tree nodes

    Equality and hashing are structural; the source offset is ignored.
    """
    __slots__ = ['offset']
    prec = _PREC_ATOM

    def key(self):
        raise NotImplementedError

    def __eq__(self, other):
        if not isinstance(other, Node):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return '%s(%r)' % (type(self).__name__, self.to_text())

    def to_dict(self):
        return {'text': self.to_text()}

    def children(self):
        return ()

    def collect_vars(self, out):
        for c in self.children():
            c.collect_vars(out)

    def to_text(self):
        raise NotImplementedError

    def _child_text(self, child, min_prec):
        text = child.to_text()
        if child.text_prec() < min_prec:
            return '(' + text + ')'
        return text

    def text_prec(self):
        return self.prec


class Const(Node):
    __slots__ = ['value']

    def __init__(self, value, offset=0):
        self._set(value=float(value), offset=offset)

    def key(self):
        return ('const', self.value)

    def text_prec(self):
        return _PREC_UNARY if self.value < 0 else _PREC_ATOM

    def to_text(self):
        v = self.value
        if v.is_integer() and abs(v) < 1e15:
            return '%d' % v
        return repr(v)

    def ev(self, env):
        return self.value

    def dual(self, env, index):
        return self.value, None

    def subst(self, mapping):
        return self

    def deriv(self, var):
        return Const(0.0)


class Var(Node):
    __slots__ = ['name']

    def __init__(self, name, offset=0):
        self._set(name=name, offset=offset)

    def key(self):
        return ('var', self.name)

    def collect_vars(self, out):
        out.add(self.name)

    def to_text(self):
        return self.name

    def ev(self, env):
        return env[self.name]

    def dual(self, env, index):
        i = index.get(self.name)
        if i is None:
            return env[self.name], None
        g = [0.0] * len(index)
        g[i] = 1.0
        return env[self.name], g

    def subst(self, mapping):
        return mapping.get(self.name, self)

    def deriv(self, var):
        return Const(1.0 if self.name == var else 0.0)


class Neg(Node):
    __slots__ = ['arg']
    prec = _PREC_UNARY

    def __init__(self, arg, offset=0):
        self._set(arg=arg, offset=offset)

    def key(self):
        return ('neg', self.arg.key())

    def children(self):
        return (self.arg,)

    def to_text(self):
        return '-' + self._child_text(self.arg, _PREC_UNARY)

    def ev(self, env):
        return -self.arg.ev(env)

    def dual(self, env, index):
        v, g = self.arg.dual(env, index)
        return -v, _gscale(-1.0, g)

    def subst(self, mapping):
        return Neg(self.arg.subst(mapping), self.offset)

    def deriv(self, var):
        return Neg(self.arg.deriv(var))


class BinOp(Node):
    __slots__ = ['op', 'left', 'right']

    def __init__(self, op, left, right, offset=0):
        self._set(op=op, left=left, right=right, offset=offset)

    @property
    def prec(self):
        return _BINOP_PREC[self.op]

    def text_prec(self):
        return _BINOP_PREC[self.op]

    def key(self):
        return (self.op, self.left.key(), self.right.key())

    def children(self):
        return (self.left, self.right)

    def to_text(self):
        p = _BINOP_PREC[self.op]
        if self.op == '^':
            left = self._child_text(self.left, _PREC_ATOM)
            right = self._child_text(self.right, _PREC_UNARY)
        else:
            left = self._child_text(self.left, p)
            right = self._child_text(self.right, p + 1)
        return '%s %s %s' % (left, self.op, right)

    def _check(self, v):
        if not math.isfinite(v):
            raise _domain_error(self, 'non-finite result')
        return v

    def _power(self, a, b):
        a = float(a)
        b = float(b)
        if b.is_integer() and abs(b) < 2**31:
            try:
                return _ipow(a, int(b))
            except ZeroDivisionError:
                raise _domain_error(self, 'zero to a negative power')
            except OverflowError:
                raise _domain_error(self, 'overflow in power')
        if a <= 0.0:
            raise _domain_error(self, 'non-integer power of a nonpositive base')
        try:
            return a ** b
        except OverflowError:
            raise _domain_error(self, 'overflow in power')

    def ev(self, env):
        a = self.left.ev(env)
        b = self.right.ev(env)
        op = self.op
        if op == '+':
            return self._check(a + b)
        elif op == '-':
            return self._check(a - b)
        elif op == '*':
            return self._check(a * b)
        elif op == '/':
            if b == 0.0:
                raise _domain_error(self, 'division by zero')
            return self._check(a / b)
        else:
            return self._check(self._power(a, b))

    def dual(self, env, index):
        a, ga = self.left.dual(env, index)
        b, gb = self.right.dual(env, index)
        op = self.op
        if op == '+':
            return self._check(a + b), _gadd(ga, gb)
        elif op == '-':
            return self._check(a - b), _gaxpy(1.0, ga, -1.0, gb)
        elif op == '*':
            return self._check(a * b), _gaxpy(b, ga, a, gb)
        elif op == '/':
            if b == 0.0:
                raise _domain_error(self, 'division by zero')
            v = self._check(a / b)
            return v, _gaxpy(1.0 / b, ga, -v / b, gb)
        v = self._check(self._power(a, b))
        b = float(b)
        if b.is_integer() and gb is None:
            n = int(b)
            if n == 0 or ga is None:
                return v, None
            return v, _gscale(n * self._power(a, float(n - 1)), ga)
        if a <= 0.0:
            raise _domain_error(self, 'variable exponent needs a positive base')
        return v, _gaxpy(b * a ** (b - 1.0), ga, v * math.log(a), gb)

    def subst(self, mapping):
        return BinOp(self.op, self.left.subst(mapping), self.right.subst(mapping),
                     self.offset)

    def deriv(self, var):
        u, v = self.left, self.right
        du = u.deriv(var)
        op = self.op
        if op in '+-':
            return BinOp(op, du, v.deriv(var))
        elif op == '*':
            return BinOp('+', BinOp('*', du, v), BinOp('*', u, v.deriv(var)))
        elif op == '/':
            num = BinOp('-', BinOp('*', du, v), BinOp('*', u, v.deriv(var)))
            return BinOp('/', num, BinOp('^', v, Const(2.0)))
        vars_v = set()
        v.collect_vars(vars_v)
        if var not in vars_v:
            return BinOp('*', BinOp('*', v, BinOp('^', u, BinOp('-', v, Const(1.0)))), du)
        inner = BinOp('+', BinOp('*', v.deriv(var), Call('ln', u)),
                      BinOp('/', BinOp('*', v, du), u))
        return BinOp('*', self, inner)


class Call(Node):
    __slots__ = ['func', 'arg']

    def __init__(self, func, arg, offset=0):
        if func not in FUNCTIONS:
            raise UnknownFunctionError('unknown function %r' % func,
                                       offset=offset, expected=list(FUNCTIONS))
        self._set(func=func, arg=arg, offset=offset)

    def key(self):
        return ('call', self.func, self.arg.key())

    def children(self):
        return (self.arg,)

    def to_text(self):
        return '%s(%s)' % (self.func, self.arg.to_text())

    def _apply(self, a):
        func = self.func
        if func == 'sin':
            return math.sin(a), math.cos(a)
        elif func == 'cos':
            return math.cos(a), -math.sin(a)
        elif func == 'exp':
            try:
                e = math.exp(a)
            except OverflowError:
                raise _domain_error(self, 'overflow in exp')
            return e, e
        elif func == 'ln':
            if a <= 0.0:
                raise _domain_error(self, 'ln of a nonpositive number')
            return math.log(a), None
        elif func == 'abs':
            return abs(a), (1.0 if a > 0 else (-1.0 if a < 0 else 0.0))
        else:
            if a < 0.0:
                raise _domain_error(self, 'sqrt of a negative number')
            return math.sqrt(a), None

    def ev(self, env):
        return self._apply(self.arg.ev(env))[0]

    def dual(self, env, index):
        a, ga = self.arg.dual(env, index)
        v, d = self._apply(a)
        if ga is None:
            return v, None
        if self.func == 'ln':
            d = 1.0 / a
        elif self.func == 'sqrt':
            if v == 0.0:
                raise _domain_error(self, 'derivative of sqrt at zero')
            d = 0.5 / v
        return v, _gscale(d, ga)

    def subst(self, mapping):
        return Call(self.func, self.arg.subst(mapping), self.offset)

    def deriv(self, var):
        u = self.arg
        du = u.deriv(var)
        func = self.func
        if func == 'sin':
            outer = Call('cos', u)
        elif func == 'cos':
            outer = Neg(Call('sin', u))
        elif func == 'exp':
            outer = self
        elif func == 'ln':
            return BinOp('/', du, u)
        elif func == 'abs':
            # undefined at u = 0, unlike eval_dual
            outer = BinOp('/', u, self)
        else:
            return BinOp('/', du, BinOp('*', Const(2.0), self))
        return BinOp('*', outer, du)


class DualValue(ImmutableRecord):
    """A value with its partial derivatives with respect to seeded variables"""
    __slots__ = ['value', 'partials']

    def __init__(self, value, partials):
        self._set(value=value, partials=partials)

    def to_dict(self):
        return {'value': self.value,
                'partials': dict(sorted(self.partials.items()))}


def _as_node(x):
    if isinstance(x, Expr):
        return x.root
    if isinstance(x, Node):
        return x
    return Const(x)


class Expr(object):
    """A parsed, immutable scalar expression"""

    __slots__ = ['root', 'free_vars']

    def __init__(self, root):
        object.__setattr__(self, 'root', root)
        names = set()
        root.collect_vars(names)
        object.__setattr__(self, 'free_vars', frozenset(names))

    def __setattr__(self, name, value):
        raise AttributeError('Object is immutable')

    def __eq__(self, other):
        if not isinstance(other, Expr):
            return NotImplemented
        return self.root == other.root

    def __ne__(self, other):
        return not (self == other)

    def __hash__(self):
        return hash(self.root)

    def __str__(self):
        return self.root.to_text()

    def __repr__(self):
        return 'Expr(%r)' % str(self)

    def _require(self, bindings):
        missing = [n for n in self.free_vars if n not in bindings]
        if missing:
            raise MissingBindingError('missing bindings for %s in %r'
                                      % (', '.join(sorted(missing)), str(self)),
                                      missing=sorted(missing))

    def eval(self, bindings):
        """Evaluate with a mapping of variable name to float"""
        self._require(bindings)
        return self.root.ev(bindings)

    def value_and_grad(self, bindings, index):
        """Value and gradient list ordered by index (name -> position)

        The gradient is None when it is identically zero.
        """
        return self.root.dual(bindings, index)

    def eval_dual(self, bindings, seeds):
        """Evaluate with partial derivatives for the seeded variables"""
        self._require(bindings)
        seeds = list(seeds) if not isinstance(seeds, (set, frozenset)) else sorted(seeds)
        index = dict((name, i) for i, name in enumerate(seeds))
        v, g = self.root.dual(bindings, index)
        if g is None:
            g = [0.0] * len(seeds)
        return DualValue(v, dict(zip(seeds, g)))

    def substitute(self, mapping):
        """Replace variables by expressions (or numbers)"""
        nodes = dict((name, _as_node(e)) for name, e in mapping.items())
        return Expr(self.root.subst(nodes))

    def derivative(self, var):
        """Symbolic first derivative, unsimplified"""
        return Expr(self.root.deriv(var))

    def is_constant(self):
        return not self.free_vars

    # tree building
    @classmethod
    def const(cls, value):
        return cls(Const(value))

    @classmethod
    def var(cls, name):
        return cls(Var(name))

    @classmethod
    def call(cls, func, arg):
        return cls(Call(func, _as_node(arg)))

    def _bin(self, op, other, reverse=False):
        a, b = self.root, _as_node(other)
        if reverse:
            a, b = b, a
        return Expr(BinOp(op, a, b))

    def __add__(self, other):
        return self._bin('+', other)

    def __radd__(self, other):
        return self._bin('+', other, True)

    def __sub__(self, other):
        return self._bin('-', other)

    def __rsub__(self, other):
        return self._bin('-', other, True)

    def __mul__(self, other):
        return self._bin('*', other)

    def __rmul__(self, other):
        return self._bin('*', other, True)

    def __truediv__(self, other):
        return self._bin('/', other)

    def __rtruediv__(self, other):
        return self._bin('/', other, True)

    __div__ = __truediv__
    __rdiv__ = __rtruediv__

    def __pow__(self, other):
        return self._bin('^', other)

    def __neg__(self):
        return Expr(Neg(self.root))


def linear_combination(coeffs, exprs):
    """sum(c*e) skipping exact zero coefficients; Const(0) when empty"""
    total = None
    for c, e in zip(coeffs, exprs):
        c = float(c)
        if c == 0.0:
            continue
        term = _as_node(e) if c == 1.0 else BinOp('*', Const(c), _as_node(e))
        total = term if total is None else BinOp('+', total, term)
    return Expr(total if total is not None else Const(0.0))


_TOKEN_RE = re.compile(r'\s*(?:'
                       r'(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|'
                       r'(?P<ident>[A-Za-z_][A-Za-z_0-9]*)|'
                       r'(?P<op>[-+*/^(),]))')


class _Parser(object):
    def __init__(self, source):
        self.source = source
        self.tokens = []
        pos = 0
        n = len(source)
        while pos < n:
            if source[pos].isspace():
                pos += 1
                continue
            m = _TOKEN_RE.match(source, pos)
            if m is None or m.end() == pos:
                self._fail(pos, 'unexpected character %r' % source[pos],
                           'number, identifier or operator')
            start = m.start(m.lastgroup)
            self.tokens.append((m.lastgroup, m.group(m.lastgroup), start))
            pos = m.end()
        self.tokens.append(('end', '', n))
        self.i = 0

    def _fail(self, index, msg, expected):
        offset = _byte_offset(self.source, index)
        raise ExprSyntaxError('%s at byte offset %d; expected %s' % (msg, offset, expected),
                              offset=offset, expected=expected)

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def offset(self, tok):
        return _byte_offset(self.source, tok[2])

    def expect_op(self, op):
        tok = self.take()
        if tok[0] != 'op' or tok[1] != op:
            self._fail(tok[2], 'unexpected %s' % (repr(tok[1]) if tok[1] else 'end of input'),
                       repr(op))
        return tok

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok[0] != 'end':
            self._fail(tok[2], 'unexpected %r' % tok[1], 'operator or end of input')
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] == 'op' and self.peek()[1] in '+-':
            tok = self.take()
            node = BinOp(tok[1], node, self.term(), self.offset(tok))
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] == 'op' and self.peek()[1] in '*/':
            tok = self.take()
            node = BinOp(tok[1], node, self.unary(), self.offset(tok))
        return node

    def unary(self):
        tok = self.peek()
        if tok[0] == 'op' and tok[1] == '-':
            self.take()
            arg = self.unary()
            if isinstance(arg, Const):
                return Const(-arg.value, self.offset(tok))
            return Neg(arg, self.offset(tok))
        return self.power()

    def power(self):
        node = self.atom()
        tok = self.peek()
        if tok[0] == 'op' and tok[1] == '^':
            self.take()
            node = BinOp('^', node, self.unary(), self.offset(tok))
        return node

    def atom(self):
        tok = self.take()
        kind, text, index = tok
        if kind == 'number':
            value = float(text)
            if not math.isfinite(value):
                self._fail(index, 'number %s overflows' % text, 'a finite number')
            return Const(value, self.offset(tok))
        if kind == 'ident':
            nxt = self.peek()
            if nxt[0] == 'op' and nxt[1] == '(':
                if text not in FUNCTIONS:
                    raise UnknownFunctionError(
                        'unknown function %r at byte offset %d; expected one of %s'
                        % (text, self.offset(tok), ', '.join(FUNCTIONS)),
                        offset=self.offset(tok), expected=list(FUNCTIONS))
                self.take()
                arg = self.expr()
                self.expect_op(')')
                return Call(text, arg, self.offset(tok))
            if text in FUNCTIONS:
                self._fail(nxt[2], 'function %r without argument' % text, "'('")
            return Var(text, self.offset(tok))
        if kind == 'op' and text == '(':
            node = self.expr()
            self.expect_op(')')
            return node
        self._fail(index, 'unexpected %s' % (repr(text) if text else 'end of input'),
                   'number, identifier or (')


def parse(source):
    """Parse expression text into an Expr"""
    if not source or not source.strip():
        raise ExprSyntaxError('empty expression; expected number, identifier or (',
                              offset=0, expected='number, identifier or (')
    return Expr(_Parser(source).parse())


def evaluate(e, bindings):
    """Evaluate e (an Expr or expression text)"""
    if not isinstance(e, Expr):
        e = parse(e)
    return e.eval(bindings)


def eval_dual(e, bindings, seeds):
    """Evaluate e with partial derivatives for the seeded variables"""
    if not isinstance(e, Expr):
        e = parse(e)
    return e.eval_dual(bindings, seeds)


__all__ = (
    'FUNCTIONS',
    'Node',
    'Const',
    'Var',
    'Neg',
    'BinOp',
    'Call',
    'DualValue',
    'Expr',
    'linear_combination',
    'parse',
    'evaluate',
    'eval_dual',
)
