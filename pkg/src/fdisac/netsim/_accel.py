"""Backend switch for the simulator kernels.

Set ``FDISAC_DISABLE_NUMBA=1`` to run the vectorized numpy versions instead
of the numba-compiled loops (also the automatic fallback when numba is not
importable).
"""
import os

try:
    import numba  # noqa: F401
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False


def numba_enabled() -> bool:
    flag = os.environ.get("FDISAC_DISABLE_NUMBA", "").strip().lower()
    return HAVE_NUMBA and flag not in ("1", "true", "yes", "on")


def backend_name() -> str:
    return "numba" if numba_enabled() else "numpy"


if HAVE_NUMBA:
    from numba import njit
else:  # pragma: no cover
    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f
