"""Hot-loop kernels with a compiled core and a pure-numpy fallback.

The compiled extension (``ionduet.kernels._core``) and the numpy reference
(``ionduet.kernels.pyref``) implement the same two operations: per-trial
phased-rotation propagation and Poisson-mixture photon counting by CDF
inversion.  Selection happens at import; set ``IONDUET_KERNELS=python`` or
``=cython`` to force a backend.
"""

import os

_REQUESTED = os.environ.get("IONDUET_KERNELS", "auto").strip().lower()

if _REQUESTED in ("auto", "", "c", "cython"):
    try:
        from . import _core as _impl

        BACKEND = "cython"
    except ImportError:
        if _REQUESTED in ("c", "cython"):
            raise
        from . import pyref as _impl

        BACKEND = "python"
elif _REQUESTED in ("py", "python"):
    from . import pyref as _impl

    BACKEND = "python"
else:
    raise ValueError(f"IONDUET_KERNELS={_REQUESTED!r}: expected 'auto', 'cython' or 'python'")

apply_phased_rotation = _impl.apply_phased_rotation
poisson_mixture_counts = _impl.poisson_mixture_counts


def available_backends() -> dict:
    """Importable backend modules keyed by name (for tests and benchmarks)."""
    from . import pyref

    found = {"python": pyref}
    try:
        from . import _core

        found["cython"] = _core
    except ImportError:
        pass
    return found
