"""Kernel backend selection: compiled extension if built, numpy fallback.

Set GRASPDET_FORCE_PY=1 to ignore the extension (useful when profiling the
fallback). `feasibility_grid` is the only hot entry point; both backends
share its contract and produce identical outputs.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _fas_core_py

_compiled = None
if not os.environ.get("GRASPDET_FORCE_PY"):
    try:
        from . import _fas_core as _compiled
    except ImportError:
        _compiled = None

HAVE_COMPILED = _compiled is not None
DEFAULT_BACKEND = "compiled" if HAVE_COMPILED else "python"


def available_backends() -> tuple[str, ...]:
    return ("compiled", "python") if HAVE_COMPILED else ("python",)


def backend_module(name: str | None = None):
    name = name or DEFAULT_BACKEND
    if name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernel not available; build the extension")
        return _compiled
    if name == "python":
        return _fas_core_py
    raise ValueError(f"unknown backend {name!r}")


def feasibility_grid(
    index,
    anchors,
    rotations,
    offsets,
    widths,
    gripper,
    brute: bool = False,
    backend: str | None = None,
    threads: int = 1,
) -> np.ndarray:
    """Rule outcomes (C, D, W) for C candidates over the offset/width grid."""
    mod = backend_module(backend)
    anchors = np.ascontiguousarray(np.asarray(anchors, dtype=float).reshape(-1, 3))
    rotations = np.ascontiguousarray(np.asarray(rotations, dtype=float).reshape(-1, 3, 3))
    offsets = np.ascontiguousarray(offsets, dtype=float)
    widths = np.ascontiguousarray(widths, dtype=float)
    if offsets.size == 0 or widths.size == 0:
        raise ValueError("offsets and widths must be nonempty")

    args = (
        index.points,
        index.keys,
        index.starts,
        index.cell_size,
    )
    params = (
        offsets,
        widths,
        gripper.h / 2.0,
        gripper.l / 2.0,
        gripper.t_f,
        gripper.b_d,
        brute,
    )
    n = anchors.shape[0]
    if threads <= 1 or n < 2 * threads:
        return mod.feasibility_grid(*args, anchors, rotations, *params)

    bounds = np.linspace(0, n, threads + 1, dtype=int)
    chunks = [(anchors[a:b], rotations[a:b]) for a, b in zip(bounds, bounds[1:]) if b > a]
    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        parts = list(
            pool.map(lambda ch: mod.feasibility_grid(*args, ch[0], ch[1], *params), chunks)
        )
    return np.concatenate(parts, axis=0)
