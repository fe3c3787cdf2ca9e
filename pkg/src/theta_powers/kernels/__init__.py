"""Screening kernels with a compiled core and a numpy fallback.

The compiled module is used when it imports; setting
``THETA_POWERS_PURE_PYTHON=1`` forces the fallback.  ``BACKEND`` names the
active implementation.
"""

from __future__ import annotations

import os

from . import _pykernels as py

_impl = py
BACKEND = "numpy"
if os.environ.get("THETA_POWERS_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _c
    except ImportError:  # extension not built
        _c = None
    if _c is not None:
        _impl = _c
        BACKEND = "cython"

circ_dist = _impl.circ_dist
lattice_fracs = _impl.lattice_fracs
multiset_best = _impl.multiset_best
multiset_collect = _impl.multiset_collect
power_sum_screen = _impl.power_sum_screen
vm_hits = _impl.vm_hits


def compiled():
    """The compiled module, or None when it is unavailable."""
    try:
        from . import _ckernels
    except ImportError:
        return None
    return _ckernels


__all__ = [
    "BACKEND",
    "circ_dist",
    "lattice_fracs",
    "multiset_best",
    "multiset_collect",
    "power_sum_screen",
    "vm_hits",
    "compiled",
    "py",
]
