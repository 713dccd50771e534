"""Backend selection for the micro-step loop.

The compiled extension is used when it imports; setting ``ALQG_PURE_PYTHON=1``
forces the numpy fallback.
"""

import os

from . import _pykernels
from ._pykernels import (  # noqa: F401
    ACC_COST_INT, ACC_COST_PREV, ACC_LEN, ACC_MAX_NORM, ACC_R, ACC_STEPS, ACC_XSQ_INT,
    ACC_XSQ_PREV, STATUS_BLOWUP, STATUS_NONFINITE, STATUS_OK,
)

BACKEND = "python"
integrate_interval = _pykernels.integrate_interval

if os.environ.get("ALQG_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from ._ckernels import integrate_interval  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        pass


def get_kernel(backend=None):
    """Return ``integrate_interval`` for ``backend`` (``"cython"``, ``"python"`` or default)."""
    if backend is None:
        return integrate_interval
    if backend == "python":
        return _pykernels.integrate_interval
    if backend == "cython":
        from ._ckernels import integrate_interval as ck
        return ck
    raise ValueError(f"unknown backend {backend!r}")
