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

from daeh.cli import main

main()
