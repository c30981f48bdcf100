"""Hot-loop kernels: compiled extension when available, numpy otherwise.

The compiled backend is built from ``_kernels.pyx`` at install time; both
backends expose the same functions and produce bit-identical results.  The
environment variable ``UNIBENCH_BACKEND`` (``compiled`` or ``numpy``) forces
a choice at import time.
"""

import os

from unibench.kernels import fallback

try:
    from unibench.kernels import _kernels as _compiled
except ImportError:
    _compiled = None

_BACKENDS = {"numpy": fallback}
if _compiled is not None:
    _BACKENDS["compiled"] = _compiled


def get_backend(name: str):
    """Backend module by name; raises KeyError if it is not available."""
    return _BACKENDS[name]


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


_forced = os.environ.get("UNIBENCH_BACKEND")
if _forced:
    if _forced not in _BACKENDS:
        raise ImportError(
            f"UNIBENCH_BACKEND={_forced!r} is not available; "
            f"choices: {', '.join(sorted(_BACKENDS))}"
        )
    active = _BACKENDS[_forced]
else:
    active = _compiled if _compiled is not None else fallback

BACKEND = active.NAME

STREAM_KERNELS = {
    "copy": active.stream_copy,
    "scale": active.stream_scale,
    "add": active.stream_add,
    "triad": active.stream_triad,
}

gemm_naive = active.gemm_naive
gemm_tiled_rows = active.gemm_tiled_rows
