"""Kernel backend selection.

Set HYPERROM_BACKEND=numpy to force the pure-numpy kernel path; anything
else (or unset) uses numba when it is importable.
"""

import os

_requested = os.environ.get("HYPERROM_BACKEND", "auto").lower()

if _requested == "numpy":
    NUMBA_ENABLED = False
else:
    try:
        import numba  # noqa: F401

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        NUMBA_ENABLED = False


def backend_name():
    return "numba" if NUMBA_ENABLED else "numpy"
