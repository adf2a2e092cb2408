"""Hot numerical kernels.

The compiled extension is used when it was built and imports cleanly;
otherwise the numpy fallback is selected.  Setting the environment variable
``POISSON_AVERAGING_PURE=1`` forces the fallback.
"""

import os

from . import _fallback

BACKEND = "python"
poly_eval_batch = _fallback.poly_eval_batch

if os.environ.get("POISSON_AVERAGING_PURE", "") not in ("1", "true", "yes"):
    try:
        from ._polyeval import poly_eval_batch  # noqa: F811
    except ImportError:
        pass
    else:
        BACKEND = "compiled"

__all__ = ["BACKEND", "poly_eval_batch"]
