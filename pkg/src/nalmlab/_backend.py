"""Kernel backend selection.

The compiled Cython core (`nalmlab._speedups`) is preferred when importable;
otherwise the pure numpy kernels are used. Set NALMLAB_BACKEND=pure or
NALMLAB_BACKEND=compiled to force a choice (forcing `compiled` raises if the
extension is missing).
"""

from __future__ import annotations

import os

from . import _pure

_forced = os.environ.get("NALMLAB_BACKEND", "").strip().lower()

if _forced == "pure":
    impl = _pure
elif _forced in ("", "compiled"):
    try:
        from . import _speedups as impl  # type: ignore[no-redef]
    except ImportError:
        if _forced == "compiled":
            raise ImportError(
                "NALMLAB_BACKEND=compiled but the nalmlab._speedups extension "
                "is not built; run `pip install -e . --no-build-isolation`"
            )
        impl = _pure
else:
    raise ValueError(f"NALMLAB_BACKEND must be 'pure' or 'compiled', got {_forced!r}")

BACKEND = impl.BACKEND_NAME


def get_backend(name: str | None = None):
    """Return a kernel module by name ('pure' / 'compiled'), default current."""
    if name is None:
        return impl
    if name == "pure":
        return _pure
    if name == "compiled":
        from . import _speedups

        return _speedups
    raise ValueError(f"unknown backend {name!r}")
