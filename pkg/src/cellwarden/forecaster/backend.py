"""LSTM kernel backend selection.

The compiled extension is preferred when importable; the numpy twin is the
fallback. ``CELLWARDEN_BACKEND`` forces the choice: ``cython``, ``numpy``,
or ``auto`` (default). Both backends share one contract and agree to near
machine precision; the active name is recorded in run manifests.
"""

from __future__ import annotations

import os

from . import kernel_numpy

_requested = os.environ.get("CELLWARDEN_BACKEND", "auto").strip().lower()
if _requested not in ("auto", "cython", "numpy"):
    raise RuntimeError(
        f"CELLWARDEN_BACKEND must be auto, cython, or numpy: {_requested!r}")

_compiled = None
if _requested in ("auto", "cython"):
    try:
        from . import _kernel as _compiled  # type: ignore[attr-defined]
    except ImportError:
        _compiled = None
    if _requested == "cython" and _compiled is None:
        raise RuntimeError(
            "CELLWARDEN_BACKEND=cython but the compiled kernel is not "
            "available; reinstall with a C toolchain or use numpy")

if _compiled is not None:
    BACKEND_NAME = "cython"
    lstm_layer_forward = _compiled.lstm_layer_forward
    lstm_layer_backward = _compiled.lstm_layer_backward
else:
    BACKEND_NAME = "numpy"
    lstm_layer_forward = kernel_numpy.lstm_layer_forward
    lstm_layer_backward = kernel_numpy.lstm_layer_backward
