"""Selects the compiled core when it is importable, else the numpy fallback.

``WSSVM_BACKEND`` (``auto`` | ``compiled`` | ``python``) overrides the
choice at import; :func:`set_backend` switches at runtime.
"""
import logging
import os

from . import _pycore

logger = logging.getLogger(__name__)

try:
    from . import _core
except ImportError:  # extension not built
    _core = None

_active = None


def available() -> list[str]:
    return ["compiled", "python"] if _core is not None else ["python"]


def set_backend(name: str = "auto"):
    global _active
    if name == "auto":
        _active = _core if _core is not None else _pycore
    elif name == "compiled":
        if _core is None:
            raise RuntimeError("compiled backend requested but wssvm._core is not built")
        _active = _core
    elif name == "python":
        _active = _pycore
    else:
        raise ValueError(f"unknown backend {name!r}")
    logger.debug("using %s backend", backend_name())
    return _active


def get_backend():
    return _active


def backend_name() -> str:
    return "compiled" if _active is _core and _core is not None else "python"


set_backend(os.environ.get("WSSVM_BACKEND", "auto"))
