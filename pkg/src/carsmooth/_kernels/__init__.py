"""Kernel backend selection: compiled extension if available, else Python.

Set CARSMOOTH_FORCE_PY=1 to force the pure-Python fallback (used by the
benchmark and the backend-equivalence tests).
"""

import os

from . import _sweep_py

if os.environ.get("CARSMOOTH_FORCE_PY"):
    _impl = _sweep_py
    BACKEND = "python"
else:
    try:
        from . import _sweep as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _sweep_py
        BACKEND = "python"

phi_sweep = _impl.phi_sweep
phi_sweep_py = _sweep_py.phi_sweep
