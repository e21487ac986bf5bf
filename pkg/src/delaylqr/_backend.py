"""Selects the numerical kernel backend at import time.

The compiled extension is preferred when it imported cleanly; the pure
numpy implementation is always available as a fallback. Set the
environment variable ``DELAY_LQR_BACKEND`` to ``cython`` or ``python``
to force one side (forcing ``cython`` raises if the extension is not
built).
"""

import os

from . import _kernels_py


def _load():
    choice = os.environ.get("DELAY_LQR_BACKEND", "").strip().lower()
    if choice == "python":
        return _kernels_py
    try:
        from . import _kernels
    except ImportError:
        if choice == "cython":
            raise ImportError(
                "DELAY_LQR_BACKEND=cython but the compiled extension is not available"
            )
        return _kernels_py
    return _kernels


kernels = _load()
BACKEND = kernels.BACKEND
