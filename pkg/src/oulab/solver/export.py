"""Flat binary export of grid solutions with a JSON header."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

__all__ = ["mask_rle", "mask_from_rle", "export_solution", "load_solution"]


def mask_rle(mask) -> list:
    """Run-length encoding ``[[value, length], ...]`` of the C-order flattened mask."""
    flat = np.asarray(mask, dtype=bool).ravel()
    if flat.size == 0:
        return []
    edges = np.flatnonzero(np.diff(flat.astype(np.int8))) + 1
    starts = np.concatenate([[0], edges])
    lengths = np.diff(np.concatenate([starts, [flat.size]]))
    return [[int(flat[s]), int(n)] for s, n in zip(starts, lengths)]


def mask_from_rle(rle, shape) -> np.ndarray:
    flat = np.concatenate([np.full(n, bool(v)) for v, n in rle]) if rle else np.zeros(0, bool)
    return flat.reshape(shape)


def export_solution(sol, path) -> tuple[Path, Path]:
    """Write ``<path>.bin`` (float64, C order, full grid) and ``<path>.json``."""
    path = Path(path)
    grid = sol.grid
    binary = path.with_suffix(".bin")
    header = path.with_suffix(".json")
    sol.values.astype("<f8").tofile(binary)
    meta = {
        "dims": grid.dim,
        "shape": list(grid.shape),
        "lo": grid.lo.tolist(),
        "hi": grid.hi.tolist(),
        "dtype": "<f8",
        "order": "C",
        "resolvent_lambda": sol.resolvent_lambda,
        "eigenvalues": sol.measure.eigenvalues[: grid.dim].tolist(),
        "mask_rle": mask_rle(grid.mask),
    }
    header.write_text(json.dumps(meta, indent=2))
    return binary, header


def load_solution(path):
    """Inverse of :func:`export_solution`: ``(values, mask, header)``."""
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    shape = tuple(meta["shape"])
    values = np.fromfile(path.with_suffix(".bin"), dtype=meta["dtype"]).reshape(shape)
    return values, mask_from_rle(meta["mask_rle"], shape), meta
