"""Cubical cell complex of a rectangular Cartesian grid.

Cells of degree k are axis-aligned k-dimensional boxes identified by a base
vertex and an axis subset; every cell carries the orientation induced by
ascending coordinate axes.  The module builds the signed incidence matrices
(discrete differentials) for the whole grid and the primal/dual index maps.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .errors import InvalidArgumentError

# Axis subsets per degree, ascending bitmask order.  Position of an axis
# inside a subset fixes the sign of the corresponding boundary face pair.
AXIS_SUBSETS = (
    ((),),
    ((0,), (1,), (2,)),
    ((0, 1), (0, 2), (1, 2)),
    ((0, 1, 2),),
)


def _complement(subset):
    return tuple(a for a in range(3) if a not in subset)


class GridComplex:
    """Oriented cubical complex over an (nx, ny, nz)-vertex Cartesian grid.

    Immutable after construction; incidence matrices are built once on first
    request and cached.
    """

    def __init__(self, dims, spacing, origin=(0.0, 0.0, 0.0)):
        dims = tuple(int(n) for n in dims)
        if len(dims) != 3 or any(n < 2 for n in dims):
            raise InvalidArgumentError(f"grid needs >=2 vertices per axis, got {dims}")
        if not spacing > 0:
            raise InvalidArgumentError(f"spacing must be positive, got {spacing}")
        self.dims = dims
        self.spacing = float(spacing)
        self.origin = np.asarray(origin, dtype=float).reshape(3).copy()
        self.origin.setflags(write=False)
        self._diff = {}

    def __repr__(self):
        return f"GridComplex(dims={self.dims}, spacing={self.spacing})"

    # ---- cell enumeration ------------------------------------------------

    def subset_extents(self, subset):
        """Base-vertex count per axis for cells spanning `subset`."""
        return tuple(n - 1 if a in subset else n for a, n in enumerate(self.dims))

    @lru_cache(maxsize=None)
    def _subset_offsets(self, k):
        offs = [0]
        for subset in AXIS_SUBSETS[k]:
            offs.append(offs[-1] + int(np.prod(self.subset_extents(subset))))
        return tuple(offs)

    def num_cells(self, k):
        if not 0 <= k <= 3:
            raise InvalidArgumentError(f"degree must be in 0..3, got {k}")
        return self._subset_offsets(k)[-1]

    def _ravel(self, subset, coords):
        """Linear index within a subset block, x-fastest (Fortran order)."""
        return np.ravel_multi_index(coords, self.subset_extents(subset), order="F")

    def cell_index(self, k, subset_idx, base):
        return self._subset_offsets(k)[subset_idx] + int(
            self._ravel(AXIS_SUBSETS[k][subset_idx], tuple(np.asarray(base)))
        )

    def cell_decode(self, k, index):
        """Inverse of cell_index: (subset_idx, base coordinate triple)."""
        offs = self._subset_offsets(k)
        for si, subset in enumerate(AXIS_SUBSETS[k]):
            if index < offs[si + 1]:
                local = index - offs[si]
                coords = np.unravel_index(local, self.subset_extents(subset), order="F")
                return si, tuple(int(c) for c in coords)
        raise InvalidArgumentError(f"cell index {index} out of range for degree {k}")

    def cell_vertices(self, k, index):
        """Vertex indices of one k-cell (2**k corners)."""
        si, base = self.cell_decode(k, index)
        subset = AXIS_SUBSETS[k][si]
        corners = []
        for bits in range(1 << k):
            c = list(base)
            for j, a in enumerate(subset):
                c[a] += (bits >> j) & 1
            corners.append(int(np.ravel_multi_index(c, self.dims, order="F")))
        return corners

    def vertex_positions(self):
        """(nx*ny*nz, 3) array of vertex coordinates, x-fastest order."""
        axes = [self.origin[a] + self.spacing * np.arange(self.dims[a]) for a in range(3)]
        xs, ys, zs = np.meshgrid(*axes, indexing="ij")
        return np.stack(
            [xs.ravel(order="F"), ys.ravel(order="F"), zs.ravel(order="F")], axis=1
        )

    def dual_point_positions(self):
        """Positions of the padded dual lattice, shape (nx+1, ny+1, nz+1, 3).

        Index p along an axis sits at origin + (p - 1/2) * spacing; the inner
        block [1:-1, 1:-1, 1:-1] are the primal 3-cell centers.
        """
        axes = [
            self.origin[a] + self.spacing * (np.arange(self.dims[a] + 1) - 0.5)
            for a in range(3)
        ]
        xs, ys, zs = np.meshgrid(*axes, indexing="ij")
        return np.stack([xs, ys, zs], axis=-1)

    # ---- incidence matrices ----------------------------------------------

    def differential(self, k):
        """Signed incidence matrix D_k mapping k-forms to (k+1)-forms.

        Row (k+1)-cell, column k-cell, entries in {-1, 0, +1}; each row has
        exactly 2(k+1) non-zeros.  D_{k+1} @ D_k is exactly zero over the
        integers.
        """
        if not 0 <= k <= 2:
            raise InvalidArgumentError(f"differential degree must be in 0..2, got {k}")
        if k not in self._diff:
            self._diff[k] = self._build_differential(k)
        return self._diff[k]

    def _build_differential(self, k):
        rows, cols, vals = [], [], []
        offs_hi = self._subset_offsets(k + 1)
        offs_lo = self._subset_offsets(k)
        subsets_lo = AXIS_SUBSETS[k]
        for si, subset in enumerate(AXIS_SUBSETS[k + 1]):
            ext = self.subset_extents(subset)
            grids = np.meshgrid(*[np.arange(e) for e in ext], indexing="ij")
            base = [g.ravel(order="F") for g in grids]
            cell_ids = offs_hi[si] + np.arange(base[0].size)
            for pos, axis in enumerate(subset):
                face_subset = tuple(a for a in subset if a != axis)
                fsi = subsets_lo.index(face_subset)
                fext = self.subset_extents(face_subset)
                sign = 1 if pos % 2 == 0 else -1
                lo = list(base)
                bottom = offs_lo[fsi] + np.ravel_multi_index(lo, fext, order="F")
                hi = list(base)
                hi[axis] = hi[axis] + 1
                top = offs_lo[fsi] + np.ravel_multi_index(hi, fext, order="F")
                rows.append(np.concatenate([cell_ids, cell_ids]))
                cols.append(np.concatenate([top, bottom]))
                vals.append(
                    np.concatenate(
                        [
                            np.full(cell_ids.size, sign, dtype=np.int64),
                            np.full(cell_ids.size, -sign, dtype=np.int64),
                        ]
                    )
                )
        mat = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.num_cells(k + 1), self.num_cells(k)),
            dtype=np.int64,
        )
        return mat.tocsr()

    # ---- primal/dual correspondence ----------------------------------------

    def dual_grid(self):
        """Dual Cartesian grid: translated by -spacing/2, one more vertex per axis.

        Vertex p of the dual grid sits at the padded dual-lattice position of
        this grid, so dual 3-cell centers coincide with primal vertices.
        """
        return GridComplex(
            tuple(n + 1 for n in self.dims),
            self.spacing,
            self.origin - 0.5 * self.spacing,
        )

    def primal_to_dual(self, k, index):
        """Index of the dual (3-k)-cell of a primal k-cell, on dual_grid()."""
        si, base = self.cell_decode(k, index)
        subset = AXIS_SUBSETS[k][si]
        comp = _complement(subset)
        dual = self.dual_grid()
        w = tuple(base[a] + 1 if a in subset else base[a] for a in range(3))
        dsi = AXIS_SUBSETS[3 - k].index(comp)
        return dual.cell_index(3 - k, dsi, w)

    def dual_to_primal(self, k, dual_index):
        """Partial inverse of primal_to_dual (defined off the dual boundary)."""
        dual = self.dual_grid()
        dsi, w = dual.cell_decode(3 - k, dual_index)
        comp = AXIS_SUBSETS[3 - k][dsi]
        subset = _complement(comp)
        v = tuple(w[a] - 1 if a in subset else w[a] for a in range(3))
        if any(c < 0 for c in v):
            raise InvalidArgumentError("dual cell has no primal counterpart")
        si = AXIS_SUBSETS[k].index(subset)
        return self.cell_index(k, si, v)

    def dual_cell_corner_coords(self, k, subset_idx):
        """Padded-dual-lattice coordinates of dual-cell corners for one subset.

        Returns (corner_count, 3, cells) integer arrays flattened x-fastest
        over the subset block; the dual cell of a k-cell is a (3-k)-box over
        the complement axes.
        """
        subset = AXIS_SUBSETS[k][subset_idx]
        comp = _complement(subset)
        ext = self.subset_extents(subset)
        grids = np.meshgrid(*[np.arange(e) for e in ext], indexing="ij")
        base = np.stack([g.ravel(order="F") for g in grids])  # (3, cells)
        corners = []
        for bits in range(1 << len(comp)):
            w = base.copy()
            for a in subset:
                w[a] += 1
            for j, a in enumerate(comp):
                w[a] += (bits >> j) & 1
            corners.append(w)
        return np.stack(corners)


def build_grid(dims, spacing, origin=(0.0, 0.0, 0.0)) -> GridComplex:
    """Construct a GridComplex; dims are vertex counts per axis."""
    return GridComplex(dims, spacing, origin)


def boundary_matrix(grid: GridComplex, k: int):
    """Discrete differential D_k of the full grid (transpose of the boundary
    operator on (k+1)-cells)."""
    return grid.differential(k)
