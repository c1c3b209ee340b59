"""Kernel backend selection: compiled extension when built, numpy otherwise.

``run_enumeration`` and ``BACKEND`` come from the compiled module if the
import succeeds; both backends implement the same contract and are compared
in ``benchmarks/bench_kernels.py``.
"""

from . import fallback

try:  # pragma: no cover - depends on the build environment
    from . import _native
except ImportError:  # pragma: no cover
    _native = None

if _native is not None:
    run_enumeration = _native.run_enumeration
    BACKEND = _native.BACKEND
else:
    run_enumeration = fallback.run_enumeration
    BACKEND = fallback.BACKEND


def available_backends() -> dict:
    """Name -> run_enumeration callable for every importable backend."""
    backends = {"fallback": fallback.run_enumeration}
    if _native is not None:
        backends["native"] = _native.run_enumeration
    return backends
