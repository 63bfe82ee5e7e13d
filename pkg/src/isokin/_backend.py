"""Kernel backend selection.

The compiled Cython core is used when importable; setting the environment
variable ISOKIN_PURE_PYTHON=1 (before import) forces the NumPy fallback.
Both implement the same algorithm step for step.
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("ISOKIN_PURE_PYTHON"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"


def backend_name() -> str:
    return BACKEND


def integrate_frames(omega_nodes, omega_mids, h):
    return _impl.integrate_frames(omega_nodes, omega_mids, h)


def integrate_rod(omega0, lam, h, steps):
    return _impl.integrate_rod(omega0, lam, h, steps)
