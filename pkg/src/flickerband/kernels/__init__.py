"""Hot numeric kernels with a numba backend and a pure-numpy fallback.

The backend is picked once at import. Set ``FLICKERBAND_DISABLE_NUMBA=1``
to force the numpy path; it is also used when numba cannot be imported.
Both backends expose the same functions; ``get_backend`` returns either
one explicitly (tests and the benchmark compare them).
"""

import logging
import os

from . import _numpy

log = logging.getLogger(__name__)

ENV_FLAG = "FLICKERBAND_DISABLE_NUMBA"


def _flag_set():
    return os.environ.get(ENV_FLAG, "").strip().lower() not in ("", "0", "false", "no")


def _load_numba():
    try:
        from . import _numba
    except ImportError:  # pragma: no cover - numba is a declared dependency
        log.warning("numba unavailable, using numpy kernels")
        return None
    return _numba


def get_backend(name=None):
    """Return the kernel module for ``name`` ("numba" or "numpy").

    ``None`` returns the active backend.
    """
    if name is None:
        return active
    if name == "numpy":
        return _numpy
    if name == "numba":
        mod = _load_numba()
        if mod is None:
            raise RuntimeError("numba backend requested but numba is not importable")
        return mod
    raise ValueError(f"unknown kernel backend {name!r}")


active = _numpy if _flag_set() else (_load_numba() or _numpy)
BACKEND = active.NAME

stripe_layer = active.stripe_layer
gain_field = active.gain_field
apply_gain = active.apply_gain
isp_inverse = active.isp_inverse
isp_forward = active.isp_forward
butterworth_bands = active.butterworth_bands
normalize_rows = active.normalize_rows
ta_rows = active.ta_rows
ta_grad_rows = active.ta_grad_rows

__all__ = [
    "BACKEND", "ENV_FLAG", "get_backend", "stripe_layer", "gain_field",
    "apply_gain", "isp_inverse", "isp_forward", "butterworth_bands",
    "normalize_rows", "ta_rows", "ta_grad_rows",
]
