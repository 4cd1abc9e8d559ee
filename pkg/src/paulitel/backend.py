"""Kernel backend selection.

The compiled Cython extension is used when importable; otherwise the pure
numpy fallback takes over. Set PAULITEL_PURE=1 to force the fallback. Both
backends implement the same functions with identical random-stream
consumption, so results do not depend on the choice.
"""

from __future__ import annotations

import os

from . import _kernel_py

_FORCE_PURE = os.environ.get("PAULITEL_PURE", "") not in ("", "0")

if not _FORCE_PURE:
    try:
        from . import _kernel as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        _impl = _kernel_py
        BACKEND = "pure"
else:
    _impl = _kernel_py
    BACKEND = "pure"

apply_pairs_dense = _impl.apply_pairs_dense
match_sites = _impl.match_sites
step_csr = _impl.step_csr


def get_backend() -> str:
    return BACKEND


def load_backend(name: str):
    """Explicit backend module, for parity tests and benchmarks."""
    if name == "pure":
        return _kernel_py
    if name == "compiled":
        from . import _kernel  # type: ignore[attr-defined]

        return _kernel
    raise ValueError(f"unknown backend {name!r}")
