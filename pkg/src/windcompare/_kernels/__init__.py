"""Hot-kernel backend selection.

Prefers the compiled Cython extension and falls back to the pure-numpy
implementation when it is unavailable. ``WINDCOMPARE_PURE_PYTHON=1``
forces the fallback (used by the benchmark and the equivalence tests).
Both backends return identical arrays for identical inputs.
"""

import os

from . import _fallback

if os.environ.get("WINDCOMPARE_PURE_PYTHON") == "1":
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _core as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"

knn_indices = _impl.knn_indices
match_one_way_indices = _impl.match_one_way_indices


def backend_name() -> str:
    return BACKEND
