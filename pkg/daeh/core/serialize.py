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

"""Immutable records and deterministic report serialization

Reports are JSON with keys in insertion order and every float written with
FLOAT_FORMAT, so identical inputs give byte-identical output.
"""

from __future__ import absolute_import, division, print_function

import csv
import json
import math
import numbers

import numpy as np

FLOAT_FORMAT = '%.12e'
SCHEMA_VERSION = 1


class SerializationError(Exception):
    """Base class for serialization errors"""


class ImmutableRecord(object):
    """Immutable record with named fields

    Subclasses list their fields in __slots__ and build instances with
    _set(); after construction attributes cannot be assigned.
    """

    __slots__ = []

    def _set(self, **fields):
        for name, value in fields.items():
            object.__setattr__(self, name, value)

    def __setattr__(self, name, value):
        raise AttributeError('Object is immutable')

    def __delattr__(self, name):
        raise AttributeError('Object is immutable')

    def _fields(self):
        names = []
        for cls in reversed(type(self).__mro__):
            names.extend(getattr(cls, '__slots__', ()))
        return names

    def to_dict(self):
        """Report form; subclasses override to choose key order"""
        return dict((name, getattr(self, name)) for name in self._fields())

    def __eq__(self, other):
        if (not isinstance(other, self.__class__) and
                not isinstance(self, other.__class__)):
            return NotImplemented
        return dumps(self.to_dict()) == dumps(other.to_dict())

    def __ne__(self, other):
        return not (self == other)

    __hash__ = None

    def __repr__(self):
        return '%s(%s)' % (type(self).__name__,
                           ', '.join('%s=%r' % (n, getattr(self, n, None))
                                     for n in self._fields()))


def format_float(x):
    x = float(x)
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return FLOAT_FORMAT % x


def _encode(obj, out):
    if obj is None:
        out.append('null')
    elif isinstance(obj, (bool, np.bool_)):
        out.append('true' if obj else 'false')
    elif isinstance(obj, numbers.Integral):
        out.append('%d' % int(obj))
    elif isinstance(obj, complex) or isinstance(obj, np.complexfloating):
        out.append('{"re": %s, "im": %s}' % (format_float(obj.real),
                                              format_float(obj.imag)))
    elif isinstance(obj, numbers.Real):
        out.append(format_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, ImmutableRecord):
        _encode(obj.to_dict(), out)
    elif hasattr(obj, 'to_dict'):
        _encode(obj.to_dict(), out)
    elif isinstance(obj, dict):
        out.append('{')
        first = True
        for key, value in obj.items():
            if not isinstance(key, str):
                raise SerializationError('non-string key %r' % (key,))
            if not first:
                out.append(', ')
            first = False
            out.append(json.dumps(key))
            out.append(': ')
            _encode(value, out)
        out.append('}')
    elif isinstance(obj, (list, tuple, np.ndarray)):
        if isinstance(obj, np.ndarray):
            obj = obj.tolist()
        out.append('[')
        for i, value in enumerate(obj):
            if i:
                out.append(', ')
            _encode(value, out)
        out.append(']')
    else:
        raise SerializationError('cannot serialize %r' % (obj,))


def dumps(obj):
    """Serialize obj to deterministic JSON text"""
    out = []
    _encode(obj, out)
    return ''.join(out)


def loads(text):
    """Parse report JSON; the string markers for non-finite floats stay strings"""
    return json.loads(text)


def write_csv(f, header, rows):
    """Write rows to an open text file, floats in FLOAT_FORMAT"""
    writer = csv.writer(f, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        cells = []
        for value in row:
            if isinstance(value, (bool, np.bool_)):
                cells.append('true' if value else 'false')
            elif isinstance(value, numbers.Integral):
                cells.append('%d' % int(value))
            elif isinstance(value, numbers.Real):
                cells.append(FLOAT_FORMAT % float(value))
            else:
                cells.append(str(value))
        writer.writerow(cells)


__all__ = (
    'FLOAT_FORMAT',
    'SCHEMA_VERSION',
    'SerializationError',
    'ImmutableRecord',
    'format_float',
    'dumps',
    'loads',
    'write_csv',
)
