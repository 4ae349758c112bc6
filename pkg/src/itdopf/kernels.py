"""Backend selection for the polar pair-term kernels.

A pair term is ``cx * X + cw * W`` with ``X = |Va||Vc| cos(ta - tc)`` and
``W = |Va||Vc| sin(ta - tc)``.  ``polar_pair_eval`` returns the values and the
``(n, 4)`` gradient with respect to ``(vm_a, va_a, vm_c, va_c)``;
``polar_pair_hess`` returns the weighted upper-triangle Hessian entries in
row-major order ``(00, 01, 02, 03, 11, 12, 13, 22, 23, 33)``.

The compiled extension is used when it imports; ``ITDOPF_PURE_PYTHON=1``
forces the numpy fallback.
"""

import os

from . import _kernels_py

HESS_PAIRS = ((0, 0), (0, 1), (0, 2), (0, 3), (1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3))

if os.environ.get("ITDOPF_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py
        BACKEND = "python"

polar_pair_eval = _impl.polar_pair_eval
polar_pair_hess = _impl.polar_pair_hess
