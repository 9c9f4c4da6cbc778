"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the pure-Python
kernels take over. ``use_backend`` switches explicitly (tests, benchmarks).
"""

import logging

from . import _pykernels

log = logging.getLogger(__name__)

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS = {"python": _pykernels}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled

_active = _compiled if _compiled is not None else _pykernels


def available_backends():
    return sorted(BACKENDS)


def active_backend():
    return "compiled" if _active is _compiled and _compiled is not None else "python"


def use_backend(name):
    """Select the kernel implementation; returns the previously active name."""
    global _active
    if name not in BACKENDS:
        raise ValueError(f"unknown or unavailable backend {name!r}; have {available_backends()}")
    prev = active_backend()
    _active = BACKENDS[name]
    return prev


def label8(mask):
    return _active.label8(mask)


def moore_trace(mask, sx, sy):
    return _active.moore_trace(mask, int(sx), int(sy))


def bilinear(field, xs, ys):
    return _active.bilinear(field, xs, ys)


def fill_polygon(pts, height, width):
    return _active.fill_polygon(pts, int(height), int(width))
