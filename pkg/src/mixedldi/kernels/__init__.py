"""Hot evaluation kernels.

The compiled extension is used when it was built and imports cleanly; set
``MIXEDLDI_PURE_PYTHON=1`` to force the pure-Python fallback.  Both backends
produce bitwise identical results.
"""
import os

from . import _pykernels as python_backend

compiled_backend = None
if os.environ.get("MIXEDLDI_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as compiled_backend
    except ImportError:  # not built
        compiled_backend = None

_impl = compiled_backend if compiled_backend is not None else python_backend
backend = _impl.NAME

interval_eval = _impl.interval_eval
dual_eval = _impl.dual_eval
jacobian_box = _impl.jacobian_box
embed_rhs = _impl.embed_rhs
embed_hull = _impl.embed_hull


def available():
    """Names of the backends importable in this process."""
    names = ["python"]
    if compiled_backend is not None:
        names.append(compiled_backend.NAME)
    return names


def get(name):
    if name == "python":
        return python_backend
    if name == "cython" and compiled_backend is not None:
        return compiled_backend
    raise ValueError(f"backend {name!r} is not available (have {available()})")
