"""Hot numerical kernels with a compiled fast path.

The Cython extension is built at install time when a compiler is
available; otherwise, or when ``UPLIFTRANK_FORCE_PYTHON=1`` is set, the
NumPy reference implementation is used. Both expose the same functions;
``BACKEND`` names the one in effect.
"""

import os

from . import _ref

_impl = _ref
if not os.environ.get("UPLIFTRANK_FORCE_PYTHON"):
    try:
        from . import _fast as _impl  # type: ignore[no-redef]
    except ImportError:
        pass

BACKEND = "python" if _impl is _ref else "compiled"

best_split = _impl.best_split
lambda_block = _impl.lambda_block
lambda_map_block = _impl.lambda_map_block

__all__ = ["BACKEND", "best_split", "lambda_block", "lambda_map_block"]
