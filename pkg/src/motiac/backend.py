"""Kernel backend selection.

The compiled extension (``motiac._kernels``) is preferred; the numpy twin
(``motiac._kernels_py``) is the fallback when the extension was not built.
Set ``MOTIAC_BACKEND=python`` or ``MOTIAC_BACKEND=compiled`` to force one.
"""

import logging
import os

from . import _kernels_py

log = logging.getLogger(__name__)

try:
    from . import _kernels
except ImportError:  # extension not built; numpy twin covers everything
    _kernels = None

_BACKENDS = {"python": _kernels_py}
if _kernels is not None:
    _BACKENDS["compiled"] = _kernels


def available_backends():
    return tuple(sorted(_BACKENDS))


def _select():
    forced = os.environ.get("MOTIAC_BACKEND", "").strip().lower()
    if forced:
        if forced not in _BACKENDS:
            raise RuntimeError(
                f"MOTIAC_BACKEND={forced!r} not available; "
                f"choose from {available_backends()}"
            )
        return forced
    return "compiled" if _kernels is not None else "python"


_active = _select()
kernels = _BACKENDS[_active]

if _active == "python" and _kernels is None and "MOTIAC_BACKEND" not in os.environ:
    log.debug("compiled kernels unavailable, using numpy fallback")


def active_backend() -> str:
    return _active


def get_kernels(name: str | None = None):
    """Return a kernel module by name, or the active one."""
    if name is None:
        return kernels
    try:
        return _BACKENDS[name]
    except KeyError:
        raise RuntimeError(f"backend {name!r} not available") from None
