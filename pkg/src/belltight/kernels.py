"""Backend selection for the composition-enumeration kernel.

The compiled extension is used when it imports; otherwise, or when
``BELLTIGHT_BACKEND=python`` is set, the numpy fallback is used. Both expose
``enumerate_min`` with identical semantics.
"""

import os

from . import _fallback

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_BACKENDS = {"python": _fallback}
if _compiled is not None:
    _BACKENDS["compiled"] = _compiled


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def _default_backend() -> str:
    requested = os.environ.get("BELLTIGHT_BACKEND", "").strip().lower()
    if requested:
        if requested not in _BACKENDS:
            raise RuntimeError(
                f"BELLTIGHT_BACKEND={requested!r} is not available; have {available_backends()}")
        return requested
    return "compiled" if _compiled is not None else "python"


BACKEND = _default_backend()


def get_kernel(name: str | None = None):
    """Module implementing ``enumerate_min`` for backend ``name`` (default: active)."""
    name = name or BACKEND
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown backend {name!r}; have {available_backends()}") from None
