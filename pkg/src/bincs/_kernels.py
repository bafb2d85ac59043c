"""Backend selection for the hot loops.

The compiled extension is used when it was built; setting ``BINCS_PURE_PYTHON=1``
forces the fallback (used by the backend-equivalence tests and the benchmark).
"""
import os

from . import _glauber_py

try:
    from . import _glauber_core
except ImportError:  # extension not built
    _glauber_core = None

BACKENDS = {"python": (_glauber_py.glauber_chunk, _glauber_py.gather_sum)}
if _glauber_core is not None:
    BACKENDS["cython"] = (_glauber_core.glauber_chunk, _glauber_core.gather_sum)

if os.environ.get("BINCS_PURE_PYTHON") or _glauber_core is None:
    BACKEND = "python"
else:
    BACKEND = "cython"

glauber_chunk, gather_sum = BACKENDS[BACKEND]
