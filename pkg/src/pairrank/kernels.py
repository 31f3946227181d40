"""Kernel backend selection.

Prefers the compiled `_speedups` extension; falls back to the pure-Python
implementation when the extension is missing or when the
``PAIRRANK_PURE_PYTHON`` environment variable is set (useful for testing
the fallback and for benchmarking one against the other).
"""

from __future__ import annotations

import os

if os.environ.get("PAIRRANK_PURE_PYTHON"):
    from . import _purepy as _backend
else:
    try:
        from . import _speedups as _backend  # type: ignore[no-redef]
    except ImportError:
        from . import _purepy as _backend  # type: ignore[no-redef]

BACKEND_NAME: str = _backend.BACKEND_NAME

v = _backend.v
w = _backend.w
update_one = _backend.update_one
trueskill_sweep = _backend.trueskill_sweep
gain_scan = _backend.gain_scan
kmeans_1d = _backend.kmeans_1d
