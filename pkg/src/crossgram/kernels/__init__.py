"""Training kernel backends.

``default_kernel()`` returns the compiled Cython backend when the extension
was built, else the pure NumPy fallback. Set CROSSGRAM_KERNEL=python or
=cython to force one (the benchmark and some tests do).
"""

from __future__ import annotations

import os
import warnings

from . import reference
from .reference import KernelRng

try:
    from . import _ckernels as compiled
except ImportError:
    compiled = None


def available_backends() -> list:
    return [m for m in (compiled, reference) if m is not None]


def default_kernel():
    forced = os.environ.get("CROSSGRAM_KERNEL")
    if forced == "python":
        return reference
    if forced == "cython":
        if compiled is None:
            raise ImportError(
                "CROSSGRAM_KERNEL=cython but the compiled extension is not built")
        return compiled
    if forced:
        raise ValueError(f"unknown CROSSGRAM_KERNEL value {forced!r}")
    if compiled is None:
        warnings.warn(
            "compiled training kernel unavailable; using the slow NumPy fallback",
            RuntimeWarning,
            stacklevel=2,
        )
        return reference
    return compiled


__all__ = ["KernelRng", "available_backends", "compiled", "default_kernel", "reference"]
