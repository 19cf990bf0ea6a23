"""Hot numeric kernels with a compiled core and a NumPy fallback.

The compiled extension (Cython) is preferred when built; set
``CEPHALO_KERNELS=python`` or ``CEPHALO_KERNELS=native`` to force a
specific implementation. Both expose the identical surface:
``minmax_normalize``, ``resize_bilinear``, ``gaussian_stack`` and
``decode_peaks``.
"""

import os

from . import _py_impl

_forced = os.environ.get("CEPHALO_KERNELS", "auto").lower()

if _forced in ("python", "py"):
    _impl = _py_impl
elif _forced == "native":
    from . import _native as _impl  # hard failure if forced but not built
else:
    try:
        from . import _native as _impl
    except ImportError:
        _impl = _py_impl

IMPLEMENTATION = _impl.IMPLEMENTATION
minmax_normalize = _impl.minmax_normalize
resize_bilinear = _impl.resize_bilinear
gaussian_stack = _impl.gaussian_stack
decode_peaks = _impl.decode_peaks

#: Both implementations, for parity tests and benchmarks.
def available_implementations():
    impls = {"python": _py_impl}
    try:
        from . import _native
        impls["native"] = _native
    except ImportError:
        pass
    return impls
