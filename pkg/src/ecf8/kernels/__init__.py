"""Hot loops of the codec, with a numba path and a pure-numpy fallback.

The numba path is used when numba imports and ``ECF8_DISABLE_NUMBA`` is unset
(or set to ``0``/``false``). Both backends expose the same functions:

``write_bits``, ``decode_sequential``, ``thread_counts``, ``decode_blocks``.
"""

import os

from . import _numpy as numpy_backend

try:
    from . import _numba as numba_backend
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba_backend = None

_disabled = os.environ.get("ECF8_DISABLE_NUMBA", "").strip().lower() not in ("", "0", "false", "no")
USE_NUMBA = numba_backend is not None and not _disabled

active = numba_backend if USE_NUMBA else numpy_backend
BACKEND = "numba" if USE_NUMBA else "numpy"


def get_backend(name=None):
    if name is None:
        return active
    if name == "numpy":
        return numpy_backend
    if name == "numba":
        if numba_backend is None:
            raise RuntimeError("numba backend unavailable")
        return numba_backend
    raise ValueError(f"unknown backend {name!r}")
