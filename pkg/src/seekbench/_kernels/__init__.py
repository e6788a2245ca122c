"""Geometry kernel backend selection.

The compiled extension is preferred when present; the pure-numpy fallback is
algorithm- and bit-identical.  Set SEEKBENCH_PURE=1 to force the fallback.
"""

from __future__ import annotations

import os

if os.environ.get("SEEKBENCH_PURE") == "1":
    from . import pure as _impl
else:
    try:
        from . import _native as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import pure as _impl

BACKEND: str = _impl.BACKEND
min_clearance_sq = _impl.min_clearance_sq
ray_hit = _impl.ray_hit
render_scene = _impl.render_scene

__all__ = ["BACKEND", "min_clearance_sq", "ray_hit", "render_scene"]
