"""Kernel backend selection.

The hot scans (segment/edge contact, point-in-free-space parity, weighted
nearest-root evaluation, ray shooting) run as numba @njit kernels by default,
with a pure-numpy twin selected via QUICKVIS_KERNELS=numpy (or automatically
when numba is unavailable). Both backends share formulas and branch structure
so results are identical; `quickvis bench --kernel-compare` measures them.
"""

import os

from . import numpy_impl


def get_backend(name):
    if name == "numpy":
        return numpy_impl
    if name == "numba":
        from . import numba_impl
        return numba_impl
    raise ValueError(f"unknown kernel backend {name!r} (use 'numba' or 'numpy')")


def _select():
    want = os.environ.get("QUICKVIS_KERNELS", "numba").strip().lower() or "numba"
    if want == "numpy":
        return numpy_impl
    try:
        return get_backend("numba")
    except ImportError:
        return numpy_impl


impl = _select()
backend = impl.NAME

orient_filtered = impl.orient_filtered
seg_code_scan = impl.seg_code_scan
point_free_code = impl.point_free_code
point_free_batch = impl.point_free_batch
visible_code = impl.visible_code
visible_batch = impl.visible_batch
dmin_scan = impl.dmin_scan
dmin_batch = impl.dmin_batch
dmin_candidates = impl.dmin_candidates
ray_scan = impl.ray_scan
seg_hit_params = impl.seg_hit_params
warmup = impl.warmup

CLEAR = 0
BLOCKED = 1
GRAZE = 2
