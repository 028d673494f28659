"""Kernel backend selection.

Imports the compiled extension when available, otherwise the pure-numpy
fallback. `DQEST_FORCE_PY=1` forces the fallback (used by the parity tests
and the benchmark). Both backends expose the same functions and produce
identical output; only speed differs.
"""

from __future__ import annotations

import os

if os.environ.get("DQEST_FORCE_PY") == "1":
    from dqest import _kernels_py as kernels
else:
    try:
        from dqest import _kernels as kernels  # type: ignore[attr-defined]
    except ImportError:
        from dqest import _kernels_py as kernels

BACKEND: str = kernels.BACKEND
forest_fit = kernels.forest_fit
forest_predict = kernels.forest_predict
stump_scan = kernels.stump_scan
