"""Backend dispatch for the batched factorization kernels.

Two interchangeable implementations exist: ``numpy_impl`` (always
available) and ``_cyimpl`` (compiled, built when Cython was present at
install time).  Selection happens once at import via the environment
variable ``SBOLAB_BACKEND``:

    auto    use the compiled backend if importable, else numpy (default)
    numpy   force the pure-NumPy implementation
    cython  force the compiled implementation, fail loudly if missing

``python -m sbolab.benchmark`` compares the two on identical inputs.
"""

import os

from ..errors import ConfigError

_requested = os.environ.get("SBOLAB_BACKEND", "auto").strip().lower()
if _requested not in {"auto", "numpy", "cython"}:
    raise ConfigError(
        f"SBOLAB_BACKEND must be auto, numpy or cython (got {_requested!r})")

if _requested == "numpy":
    from . import numpy_impl as _impl
else:
    try:
        from . import _cyimpl as _impl  # type: ignore[attr-defined]
    except ImportError:
        if _requested == "cython":
            raise ConfigError(
                "SBOLAB_BACKEND=cython but the compiled kernel module is "
                "not built; reinstall with Cython available or use numpy")
        from . import numpy_impl as _impl

bruhat_g_batch = _impl.bruhat_g_batch
bruhat_h_batch = _impl.bruhat_h_batch


def active_backend() -> str:
    """Name of the kernel backend selected at import time."""
    return _impl.BACKEND_NAME
