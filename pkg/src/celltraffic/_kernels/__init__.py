"""Hot-loop kernels with a compiled core and a pure-numpy fallback.

The compiled backend (``_speedups``, Cython) is preferred when it built
successfully; otherwise the pure-numpy implementation is used.  Set the
environment variable ``CELLTRAFFIC_PURE=1`` to force the pure backend, e.g.
for debugging or benchmarking.  Both backends implement the same semantics
contract (see ``_pure`` module docstring), so results agree to float
round-off.
"""

import os

from . import _pure

if os.environ.get("CELLTRAFFIC_PURE", "") == "1":
    _backend = _pure
    BACKEND = "pure"
else:
    try:
        from . import _speedups as _backend

        BACKEND = "compiled"
    except ImportError:  # pragma: no cover - depends on build environment
        _backend = _pure
        BACKEND = "pure"

serving_indices = _backend.serving_indices
ray_distances = _backend.ray_distances
boundary_distances = _backend.boundary_distances
potentials = _backend.potentials
edge_targets = _backend.edge_targets

__all__ = [
    "BACKEND",
    "boundary_distances",
    "edge_targets",
    "potentials",
    "ray_distances",
    "serving_indices",
]
