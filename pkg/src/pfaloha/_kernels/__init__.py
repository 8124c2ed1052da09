"""Hot solver kernels with backend selection at import.

The compiled Cython module is used when available; otherwise (or when
``PFALOHA_FORCE_PYTHON=1`` is set) the pure-numpy fallback takes over.
``BACKEND`` reports which one is active. ``benchmarks/bench_kernels.py``
compares the two.
"""

import os

if os.environ.get("PFALOHA_FORCE_PYTHON", "") == "1":
    from . import _py as _impl
else:
    try:
        from . import _cy as _impl
    except ImportError:
        from . import _py as _impl

BACKEND = _impl.BACKEND
log_success_probs = _impl.log_success_probs
solve_fullplane = _impl.solve_fullplane
solve_views_beta4 = _impl.solve_views_beta4

__all__ = ["BACKEND", "log_success_probs", "solve_fullplane", "solve_views_beta4"]
