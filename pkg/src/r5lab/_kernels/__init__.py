"""Hot loops with a compiled implementation and a pure-Python fallback.

The compiled module is used when it was built; setting the environment
variable ``R5LAB_PURE_PYTHON=1`` forces the fallback.  ``BACKEND`` names
the implementation in use.
"""

import os

from . import _pykernels as python

compiled = None
if not os.environ.get("R5LAB_PURE_PYTHON"):
    try:
        from . import _ckernels as compiled
    except ImportError:
        compiled = None

_impl = compiled if compiled is not None else python
BACKEND = "compiled" if compiled is not None else "python"

gowers_direct = _impl.gowers_direct
lambda5_direct = _impl.lambda5_direct
cube_scan = _impl.cube_scan

__all__ = ["BACKEND", "compiled", "python", "gowers_direct", "lambda5_direct", "cube_scan"]
