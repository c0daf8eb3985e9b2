"""Hot-kernel dispatch.

The compiled extension ``rankbp._ckernels`` is used when it imports; otherwise
the pure-Python ``rankbp._pykernels`` takes over.  Setting the environment
variable ``RANKBP_KERNELS=python`` forces the fallback.  Both backends consume
random streams identically, so results do not depend on which one is active.
"""

import os

from . import _pykernels

if os.environ.get("RANKBP_KERNELS", "").lower() == "python":
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = _impl.BACKEND

jacobi_eigh = _impl.jacobi_eigh
sample_rank1_edges = _impl.sample_rank1_edges
bfs_shells = _impl.bfs_shells
simulate_bp = _impl.simulate_bp
thin_tree = _impl.thin_tree
largest_component = _impl.largest_component


def available_backends():
    """Map backend name to module for every backend that imports."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        out["cython"] = _ckernels
    return out
