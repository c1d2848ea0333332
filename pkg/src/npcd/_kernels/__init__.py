"""Kernel backend selection: compiled extension when available, numpy otherwise.

Set NPCD_BACKEND=numpy to force the fallback. Both backends produce
bit-identical results; the compiled one is just fast (see benchmarks/).
"""

import os

from . import numpy_backend
from .numpy_backend import anchor_rects, gather_patches

_backend = None
if os.environ.get("NPCD_BACKEND", "").strip().lower() != "numpy":
    try:
        from . import native_backend as _backend
    except ImportError:
        _backend = None

if _backend is None:
    _backend = numpy_backend
    BACKEND = "numpy"
else:
    BACKEND = "native"

anchor_density = _backend.anchor_density
count_in_boxes = _backend.count_in_boxes
inpaint_nearest = _backend.inpaint_nearest


def get_backend(name: str):
    """Fetch a backend module by name ('native' or 'numpy'); for tests/benchmarks."""
    if name == "numpy":
        return numpy_backend
    if name == "native":
        from . import native_backend
        return native_backend
    raise ValueError(f"unknown backend {name!r}")
