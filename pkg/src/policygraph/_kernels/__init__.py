"""Feature-hashing kernel with compiled/pure-Python backend selection.

The compiled extension is preferred when built; the pure-Python fallback is
functionally identical (verified by tests) and used when the extension is
missing, e.g. on an install without a C toolchain.
"""

try:
    from . import _hashfeat as _impl

    BACKEND = "compiled"
except ImportError:  # pragma: no cover - depends on build environment
    from . import _hashfeat_py as _impl

    BACKEND = "python"

from . import _hashfeat_py as python_impl

accumulate_counts = _impl.accumulate_counts

__all__ = ["accumulate_counts", "BACKEND", "python_impl"]
