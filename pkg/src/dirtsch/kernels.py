"""Backend selection for the negotiation kernel.

The compiled extension is used when it was built; otherwise, or when
``DIRTSCH_PURE_PYTHON=1`` is set, the pure-Python twin is used.
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("DIRTSCH_PURE_PYTHON", "") in ("", "0"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None
else:
    _compiled = None

if _compiled is not None:
    negotiate = _compiled.negotiate
    BACKEND = "cython"
else:
    negotiate = _kernels_py.negotiate
    BACKEND = "python"

negotiate_py = _kernels_py.negotiate
negotiate_compiled = _compiled.negotiate if _compiled is not None else None
