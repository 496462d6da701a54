"""Import-time selection between the compiled core and the numpy fallback.

Set ``MCES_BACKEND=python`` to force the fallback, ``MCES_BACKEND=compiled``
to fail loudly when the extension is missing; anything else (or unset)
means "compiled if available".
"""

import os

_requested = os.environ.get("MCES_BACKEND", "auto").strip().lower()

if _requested == "python":
    core = None
else:
    try:
        from . import _core as core
    except ImportError:
        core = None
    if core is None and _requested == "compiled":
        raise ImportError(
            "MCES_BACKEND=compiled but the mces._core extension is not built; "
            "reinstall with Cython and a C compiler available"
        )

HAVE_COMPILED = core is not None


def backend_name():
    """Name of the active hot-kernel backend: 'compiled' or 'python'."""
    return "compiled" if HAVE_COMPILED else "python"
