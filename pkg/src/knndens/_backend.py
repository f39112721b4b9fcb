"""Pick the kernel implementation once, at import time.

The compiled module is used when it was built; setting
``KNNDENS_PURE_PYTHON=1`` forces the numpy fallback.
"""

import os

from . import _pykernels

kernels = _pykernels

if os.environ.get("KNNDENS_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as kernels  # noqa: F811
    except ImportError:
        pass

BACKEND = kernels.BACKEND


def available():
    """Names of the kernel backends importable in this environment."""
    names = ["python"]
    try:
        from . import _ckernels  # noqa: F401
    except ImportError:
        return names
    return ["cython"] + names


def get(name):
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")
