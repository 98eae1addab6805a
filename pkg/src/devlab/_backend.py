"""Pick the trial kernel at import time.

The compiled Cython kernel is used when it was built; otherwise, or when
``DEVLAB_BACKEND=python`` is set, the pure-Python loop takes over.  Both expose
``run_trial``, ``single_round``, ``NAME`` and ``RELEASES_GIL``.
"""
from __future__ import annotations

import logging
import os

from . import _pyloop

log = logging.getLogger(__name__)

try:
    from . import _kernel as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS = {"python": _pyloop}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled


def get_backend(name=None):
    """Return the kernel module called ``name`` (``"compiled"`` or ``"python"``).

    ``None`` means the environment default: ``DEVLAB_BACKEND`` if set, else
    the compiled kernel when available.
    """
    if name is None:
        name = os.environ.get("DEVLAB_BACKEND") or ("compiled" if _compiled is not None else "python")
    if not isinstance(name, str):
        return name
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown or unavailable backend {name!r}; have {sorted(BACKENDS)}") from None


def compiled_available() -> bool:
    return _compiled is not None


default = get_backend()
if default is _pyloop and _compiled is None:
    log.info("compiled kernel unavailable; using the pure-Python trial loop")
