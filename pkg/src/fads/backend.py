"""Selects the moment-integral kernel at import time.

Prefers the compiled Cython extension; falls back to the pure-numpy
implementation when the extension is unavailable or when the
``FADS_PURE_PYTHON`` environment variable is set to a nonempty value.
``benchmarks/bench_kernels.py`` compares the two.
"""

import os

from . import _moment_kernel_py

if os.environ.get("FADS_PURE_PYTHON"):
    _impl = _moment_kernel_py
    BACKEND = "python"
else:
    try:
        from . import _moment_kernel_cy as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _moment_kernel_py
        BACKEND = "python"

moment_batch = _impl.moment_batch
