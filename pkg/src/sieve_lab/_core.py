"""Kernel backend selection.

The compiled extension is used when it imports; setting the environment
variable ``SIEVE_LAB_PURE_PYTHON=1`` forces the pure-Python fallback.  Both
backends draw identically, so results do not depend on the choice.
"""

import os

from . import _fallback

try:
    from . import _kernels
except ImportError:  # extension not built
    _kernels = None

BACKENDS = {"python": _fallback}
if _kernels is not None:
    BACKENDS["cython"] = _kernels

if os.environ.get("SIEVE_LAB_PURE_PYTHON", "") not in ("", "0") or _kernels is None:
    kernels = _fallback
else:
    kernels = _kernels

BACKEND = kernels.BACKEND


def get_backend(name=None):
    """Return the kernel module called ``name`` (default: the active one)."""
    if name is None:
        return kernels
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} is not available; have {sorted(BACKENDS)}") from None
