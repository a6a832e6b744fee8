"""Masked tensor grids over truncated level-set domains.

Cells are centred; a cell is interior when ``g`` is negative at its centre.
For every interior cell and every axis direction whose neighbour is not
interior, the distance to the ``g = 0`` crossing is stored as a fraction
``theta`` of the cell width.  The outer wall of the box counts as a crossing
at ``theta = 1/2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionTooLarge, EmptyDomain

__all__ = ["DEFAULT_RESOLUTION", "CutFaces", "GridDomain", "discretize"]

DEFAULT_RESOLUTION = {1: 512, 2: 96, 3: 32}
MAX_GRID_DIM = 3
THETA_MIN = 1e-6


@dataclass(frozen=True)
class CutFaces:
    """Cut faces of one axis direction.

    ``cells`` index the interior-cell enumeration, ``theta`` lies in (0, 1]
    and ``points`` are the crossing locations.
    """

    axis: int
    sign: int
    cells: np.ndarray
    theta: np.ndarray
    points: np.ndarray


@dataclass
class GridDomain:
    """Cell-centred tensor grid with an interior mask.

    Attributes
    ----------
    lo, hi : (n,) arrays
        Box extents.
    shape : tuple of int
        Cell counts per axis.
    mask : bool array of ``shape``
        True on interior cells.
    cuts : list of CutFaces
        One entry per (axis, sign) pair.
    scheme : str
        ``"cut_cell"`` (crossing distances) or ``"mask"`` (crossing at the
        neighbour centre).
    """

    lo: np.ndarray
    hi: np.ndarray
    shape: tuple
    mask: np.ndarray
    cuts: list
    scheme: str = "cut_cell"
    domain: object = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def spacing(self) -> np.ndarray:
        return (self.hi - self.lo) / np.asarray(self.shape)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axes(self):
        """Cell-centre coordinates per axis."""
        h = self.spacing
        return [self.lo[k] + (np.arange(self.shape[k]) + 0.5) * h[k] for k in range(self.dim)]

    def centers(self) -> np.ndarray:
        """All cell centres, shape ``shape + (n,)``."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    @property
    def interior_index(self) -> np.ndarray:
        """Flat (C-order) indices of interior cells."""
        return np.flatnonzero(self.mask)

    @property
    def n_interior(self) -> int:
        return int(np.count_nonzero(self.mask))

    def interior_points(self) -> np.ndarray:
        return self.centers().reshape(-1, self.dim)[self.interior_index]

    def index_map(self) -> np.ndarray:
        """Array of ``shape`` holding the interior enumeration, -1 outside."""
        idx = np.full(self.shape, -1, dtype=np.int64)
        idx[self.mask] = np.arange(self.n_interior)
        return idx

    def extend(self, interior_values) -> np.ndarray:
        """Null extension of interior values to the full grid."""
        out = np.zeros(self.shape)
        out[self.mask] = interior_values
        return out


def _resolution(resolution, n):
    if resolution is None:
        resolution = DEFAULT_RESOLUTION[n]
    res = np.broadcast_to(np.asarray(resolution, dtype=int), (n,))
    if np.any(res < 2):
        raise ValueError("need at least 2 cells per axis")
    return tuple(int(r) for r in res)


def _box(measure, domain, shape, box_halfwidth, clip):
    n = len(shape)
    sig = measure.sqrt_eigenvalues[:n]
    lo, hi = -box_halfwidth * sig, box_halfwidth * sig
    if clip and domain.bounds is not None:
        blo, bhi = domain.bounds
        # a few cells of exterior padding so every boundary cell has a cut
        pad = 3.0 * (bhi - blo) / (np.asarray(shape) - 6).clip(min=1)
        lo = np.maximum(lo, blo - pad)
        hi = np.minimum(hi, bhi + pad)
    if np.any(hi <= lo):
        raise EmptyDomain("domain does not meet the truncation box")
    return lo, hi


def _bisect_theta(domain, inside, outside, iters=60):
    """Fraction along ``inside -> outside`` where ``g`` changes sign."""
    lo = np.zeros(inside.shape[0])
    hi = np.ones(inside.shape[0])
    d = outside - inside
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        neg = domain.value(inside + mid[:, None] * d) < 0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
    return 0.5 * (lo + hi)


def discretize(measure, domain, resolution=None, box_halfwidth=6.0, clip=True, scheme="cut_cell"):
    """Mask and cut fractions of ``domain`` on a tensor grid.

    Parameters
    ----------
    resolution : int or sequence of int, optional
        Cells per axis; defaults to ``DEFAULT_RESOLUTION[n]``.
    box_halfwidth : float
        Box half-width in units of ``sqrt(lambda_k)``.
    clip : bool
        Shrink the box to the bounding box of a bounded domain.
    scheme : {"cut_cell", "mask"}
        Boundary treatment recorded on the grid.

    Raises
    ------
    DimensionTooLarge
        For ``n > 3``.
    EmptyDomain
        When no cell centre lies inside the domain.
    """
    n = domain.dim
    if n > MAX_GRID_DIM:
        raise DimensionTooLarge(f"grids support n <= {MAX_GRID_DIM}, got {n}")
    if scheme not in ("cut_cell", "mask"):
        raise ValueError(f"unknown boundary scheme {scheme!r}")
    shape = _resolution(resolution, n)
    lo, hi = _box(measure, domain, shape, box_halfwidth, clip)
    grid = GridDomain(lo=lo, hi=hi, shape=shape, mask=np.zeros(shape, bool), cuts=[],
                      scheme=scheme, domain=domain)
    centers = grid.centers()
    gvals = domain.value(centers.reshape(-1, n)).reshape(shape)
    mask = gvals < 0
    if not np.any(mask):
        raise EmptyDomain("no cell centre lies inside the domain")
    grid.mask = mask

    h = grid.spacing
    index = grid.index_map()
    for k in range(n):
        for sign in (1, -1):
            nb_inside = np.zeros(shape, bool)
            src = [slice(None)] * n
            dst = [slice(None)] * n
            if sign == 1:
                src[k], dst[k] = slice(1, None), slice(None, -1)
            else:
                src[k], dst[k] = slice(None, -1), slice(1, None)
            nb_inside[tuple(dst)] = mask[tuple(src)]
            cut = mask & ~nb_inside
            cells = index[cut]
            start = centers[cut]
            step = np.zeros(n)
            step[k] = sign * h[k]
            if scheme == "mask":
                theta = np.ones(cells.size)
            else:
                theta = _bisect_theta(domain, start, start + step)
            # the neighbour lies beyond the box: the wall sits half a cell away
            pos = np.indices(shape)[k][cut]
            beyond = (pos == shape[k] - 1) if sign == 1 else (pos == 0)
            theta = np.where(beyond, np.minimum(theta, 0.5), theta)
            theta = np.clip(theta, THETA_MIN, 1.0)
            grid.cuts.append(CutFaces(axis=k, sign=sign, cells=cells, theta=theta,
                                      points=start + theta[:, None] * step))
    return grid
