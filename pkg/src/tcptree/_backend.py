"""Pick the kernel implementation once, at import.

The compiled extension is used when it imports cleanly; setting
``TCPTREE_PURE=1`` forces the pure numpy/Python reference kernels.
"""

import os

from . import _pycore

pure = _pycore
kernels = _pycore
NAME = "pure"

if os.environ.get("TCPTREE_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _core as _compiled
    except ImportError:  # pragma: no cover - depends on the build
        _compiled = None
    if _compiled is not None:
        kernels = _compiled
        NAME = "compiled"

compiled = kernels if NAME == "compiled" else None

RULE_THRESHOLD = _pycore.RULE_THRESHOLD
RULE_THRESHOLD0 = _pycore.RULE_THRESHOLD0
RULE_LINEAR = _pycore.RULE_LINEAR
RULE_BOOTSTRAP = _pycore.RULE_BOOTSTRAP
