"""Diagonal Hodge stars with boundary-condition-aware fractional volumes.

Normal boundary conditions shrink primal cell volumes to the part inside the
sublevel set and keep dual volumes whole; tangential boundary conditions do
the converse.  Partial volumes come from midpoint sub-sampling of the
multilinear interpolant of the stored corner values.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidArgumentError
from .grid import AXIS_SUBSETS, _complement
from .levelset import SampledField
from .supports import Support

DEFAULT_SUBSAMPLES = 8
VOLUME_FLOOR = 1e-10


@dataclass
class HodgeStar:
    """Diagonal star entries aligned with the support's member order."""

    degree: int
    bc: str
    diagonal: np.ndarray

    def inverse(self):
        return 1.0 / self.diagonal

    def sqrt(self):
        return np.sqrt(self.diagonal)


@lru_cache(maxsize=None)
def _sample_weights(d, s):
    """Multilinear corner weights at the s^d midpoint sample grid."""
    if d == 0:
        return np.ones((1, 1))
    x = (np.arange(s) + 0.5) / s
    pts = np.stack([g.ravel() for g in np.meshgrid(*([x] * d), indexing="ij")], axis=1)
    w = np.empty((1 << d, pts.shape[0]))
    for bits in range(1 << d):
        acc = np.ones(pts.shape[0])
        for j in range(d):
            acc *= pts[:, j] if (bits >> j) & 1 else 1.0 - pts[:, j]
        w[bits] = acc
    return w


def _primal_corner_values(sampled: SampledField, subset):
    """(2^k, cells_in_block) corner values for one axis-subset block."""
    grid = sampled.grid
    ext = grid.subset_extents(subset)
    vals = []
    for bits in range(1 << len(subset)):
        sl = [slice(None)] * 3
        for j, a in enumerate(subset):
            t = (bits >> j) & 1
            sl[a] = slice(t, t + ext[a])
        vals.append(sampled.primal[tuple(sl)].ravel(order="F"))
    return np.stack(vals)


def _dual_corner_values(sampled: SampledField, subset):
    """Corner values of the dual cells of one axis-subset block.

    The dual of a k-cell spans the complement axes; along spanned primal axes
    the padded dual lattice is read at offset 1.
    """
    grid = sampled.grid
    comp = _complement(subset)
    ext = grid.subset_extents(subset)
    vals = []
    for bits in range(1 << len(comp)):
        sl = [slice(None)] * 3
        for a in subset:
            sl[a] = slice(1, 1 + ext[a])
        for j, a in enumerate(comp):
            t = (bits >> j) & 1
            sl[a] = slice(t, t + ext[a])
        vals.append(sampled.dual_padded[tuple(sl)].ravel(order="F"))
    return np.stack(vals)


def _fractions_from_corners(corners, isovalue, subsamples):
    """Inside-volume fraction per cell from multilinear sub-sampling.

    Cells with all corners inside get exactly 1, all outside exactly 0; only
    cut cells are sub-sampled.  A cut cell has strictly positive inside
    volume (corner values are perturbed off the isovalue), so its fraction is
    floored at half a quadrature quantum to stay within the sub-sampling
    accuracy while keeping the star entries bounded.
    """
    d = int(np.log2(corners.shape[0]))
    inside = corners <= isovalue
    n_in = inside.sum(axis=0)
    frac = np.zeros(corners.shape[1])
    frac[n_in == corners.shape[0]] = 1.0
    cut = (n_in > 0) & (n_in < corners.shape[0])
    if np.any(cut):
        w = _sample_weights(d, subsamples)
        vals = w.T @ corners[:, cut]
        quantum = 1.0 / subsamples**d
        raw = np.mean(vals <= isovalue, axis=0)
        frac[cut] = np.clip(raw, 0.5 * quantum, 1.0 - 0.5 * quantum)
    return frac


def _block_fractions(sampled, k, side, subsamples):
    """Fractions for every k-cell, global order, for one side."""
    out = []
    for subset in AXIS_SUBSETS[k]:
        if side == "primal":
            corners = _primal_corner_values(sampled, subset)
        else:
            corners = _dual_corner_values(sampled, subset)
        out.append(_fractions_from_corners(corners, sampled.isovalue, subsamples))
    return np.concatenate(out)


def fractional_volume(cell_id, sampled: SampledField, k: int, side: str,
                      subsamples: int = DEFAULT_SUBSAMPLES) -> float:
    """k-volume (primal) or (3-k)-volume (dual) of the inside part of one cell,
    clamped to [1e-10 * l^d, l^d]."""
    if side not in ("primal", "dual"):
        raise InvalidArgumentError(f"side must be 'primal' or 'dual', got {side!r}")
    fracs = _block_fractions(sampled, k, side, subsamples)
    d = k if side == "primal" else 3 - k
    scale = sampled.grid.spacing ** d
    return float(np.clip(fracs[cell_id] * scale, VOLUME_FLOOR * scale, scale))


def hodge_star(sampled: SampledField, k: int, bc: str, support: Support,
               subsamples: int = DEFAULT_SUBSAMPLES) -> HodgeStar:
    """Diagonal star over the support members.

    normal:      entry = l^(3-k) / inside-volume(primal cell)
    tangential:  entry = inside-volume(dual cell) / l^k
    Uncut cells give exactly l^(3-2k); outside primal volumes are never
    altered (they only enter tangential stars, where they stay whole).
    """
    if support.degree != k or support.bc != bc:
        raise InvalidArgumentError("support does not match requested degree/bc")
    ell = sampled.grid.spacing
    side = "primal" if bc == "normal" else "dual"
    d = k if bc == "normal" else 3 - k
    fracs = _block_fractions(sampled, k, side, subsamples)[support.member_ids]
    vol = np.clip(fracs, VOLUME_FLOOR, 1.0) * ell**d
    if bc == "normal":
        diag = ell ** (3 - k) / vol
    else:
        diag = vol / ell**k
    return HodgeStar(degree=k, bc=bc, diagonal=diag)
