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

from __future__ import absolute_import, division, print_function, unicode_literals

import daeh.core

from version import __version__


class DefaultParams(daeh.core.CoreDefaultParams):
    pass


class FastParams(daeh.core.CoreFastParams):
    pass


"""Master global setting for what numerical params we're using.

However, don't set this directly, use SelectParams() instead so as to set the
daeh.core.coreparams correctly too.
"""
# params = daeh.core.coreparams = DefaultParams()
params = DefaultParams()


def SelectParams(name):
    """Select the numerical parameters to use

    name is one of 'default' or 'fast'

    Default is 'default'
    """
    global params
    daeh.core._SelectCoreParams(name)
    if name == 'default':
        params = daeh.core.coreparams = DefaultParams()
    elif name == 'fast':
        params = daeh.core.coreparams = FastParams()
    else:
        raise ValueError('Unknown params %r' % name)
