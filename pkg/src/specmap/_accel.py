"""Backend selection for the compiled hot kernels.

The environment variable SPECMAP_BACKEND picks the implementation of the
inner loops in `_kernels`:

  auto   (default) use numba if it imports, else fall back to numpy
  numba  require numba, fail loudly if unavailable
  numpy  force the pure-numpy fallback even when numba is installed

The numpy fallback is functionally identical but slower; it exists so the
package runs where JIT compilation is unavailable and so the two paths can
be benchmarked against each other (see benchmarks/bench_kernels.py).
"""

import os
import warnings

_CHOICE = os.environ.get("SPECMAP_BACKEND", "auto").strip().lower()
if _CHOICE not in ("auto", "numba", "numpy"):
    warnings.warn(
        f"SPECMAP_BACKEND={_CHOICE!r} not recognized, using 'auto'", stacklevel=1
    )
    _CHOICE = "auto"

NUMBA_AVAILABLE = False
njit = None
prange = range

if _CHOICE != "numpy":
    try:
        from numba import njit, prange  # noqa: F401
        from numba.core.errors import NumbaWarning

        # numba warns when the optional TBB layer is outdated; it falls
        # back to another threading layer on its own, so hide that one.
        warnings.filterwarnings("ignore", category=NumbaWarning, message=".*TBB.*")
        NUMBA_AVAILABLE = True
    except ImportError:
        if _CHOICE == "numba":
            raise ImportError(
                "SPECMAP_BACKEND=numba but numba is not installed"
            ) from None

USING_NUMBA = NUMBA_AVAILABLE and _CHOICE != "numpy"


def backend_name():
    """Name of the active kernel backend, 'numba' or 'numpy'."""
    return "numba" if USING_NUMBA else "numpy"


def set_threads(n):
    """Limit kernel parallelism to ``n`` threads (0 keeps the default)."""
    if n and USING_NUMBA:
        import numba

        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
