"""Backend selection for the hot kernels.

The compiled ``_welzl`` extension is used when it imports; otherwise the
pure-Python implementation is used. Setting ``CONEBOUND_PURE_PYTHON=1``
forces the fallback.
"""

import os

from . import _welzl_py

BACKENDS = {"python": _welzl_py.smallest_enclosing_ball}

try:
    from ._welzl import smallest_enclosing_ball as _compiled
except ImportError:  # extension not built
    _compiled = None
else:
    BACKENDS["compiled"] = _compiled

if _compiled is not None and os.environ.get("CONEBOUND_PURE_PYTHON", "") in ("", "0"):
    BACKEND = "compiled"
else:
    BACKEND = "python"

smallest_enclosing_ball = BACKENDS[BACKEND]


def get_kernel(name=None):
    """Return the smallest-enclosing-ball kernel called `name` (default: active)."""
    if name is None:
        return smallest_enclosing_ball
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None
