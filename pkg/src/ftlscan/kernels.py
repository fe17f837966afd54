"""Backend selection for the numerical kernels.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``FTLSCAN_PURE_PYTHON`` is set to a non-empty value
other than ``0``, the numpy fallback is used.  Both backends take numpy
``Generator`` objects and produce identical results for identical inputs.
"""

from __future__ import annotations

import os

from . import _pykernels

FTL, FIXED, STRATEGY_B = _pykernels.FTL, _pykernels.FIXED, _pykernels.STRATEGY_B
STOPPED, HORIZON = _pykernels.STOPPED, _pykernels.HORIZON


def _load_compiled():
    if os.environ.get("FTLSCAN_PURE_PYTHON", "") not in ("", "0"):
        return None
    try:
        from . import _ckernels
    except ImportError:
        return None
    return _ckernels


compiled = _load_compiled()
_impl = compiled if compiled is not None else _pykernels
BACKEND = "cython" if compiled is not None else "python"

integrate_stage = _impl.integrate_stage
run_search = _impl.run_search
exit_paths = _impl.exit_paths
driftless_paths = _impl.driftless_paths


def backends() -> dict:
    """Available kernel modules keyed by name (used by tests and benchmarks)."""
    out = {"python": _pykernels}
    if compiled is not None:
        out["cython"] = compiled
    return out
