"""Backend selection for the hot Blahut-Arimoto kernel.

The compiled extension is preferred when it imported cleanly; setting the
environment variable ``GRAYWYNER_PURE=1`` forces the numpy reference
implementation.  Both backends satisfy the same contract and agree to
floating-point accuracy; ``benchmarks/bench_kernels.py`` compares them.
"""

import os

from . import reference

if os.environ.get("GRAYWYNER_PURE", "") == "1":
    _impl = reference
    BACKEND = "pure"
else:
    try:
        from . import _native as _impl
        BACKEND = "native"
    except ImportError:
        _impl = reference
        BACKEND = "pure"

STATUS_CONVERGED = reference.STATUS_CONVERGED
STATUS_MAX_ITER = reference.STATUS_MAX_ITER
STATUS_NUMERIC = reference.STATUS_NUMERIC
GAP_TOL = reference.GAP_TOL

ba_fixed_slope = _impl.ba_fixed_slope
