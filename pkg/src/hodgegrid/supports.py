"""Normal and tangential supports of a sublevel set, with projections.

A k-cell belongs to the normal support when at least one of its primal
vertices is inside the sublevel set, and to the tangential support when at
least one vertex of its dual cell is inside.  Normal supports are closed
under taking cofaces and tangential supports under taking faces, which is
what keeps the restricted differentials nilpotent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import InvalidArgumentError
from .grid import AXIS_SUBSETS, GridComplex, _complement
from .levelset import SampledField


@dataclass
class Support:
    """Membership of one (degree, boundary condition) support."""

    bc: str
    degree: int
    mask: np.ndarray  # bool per global k-cell id
    member_ids: np.ndarray = field(init=False)
    _global_to_local: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.member_ids = np.flatnonzero(self.mask)
        g2l = np.full(self.mask.size, -1, dtype=np.int64)
        g2l[self.member_ids] = np.arange(self.member_ids.size)
        self._global_to_local = g2l

    @property
    def size(self):
        return int(self.member_ids.size)

    def local_index(self, global_ids):
        loc = self._global_to_local[np.asarray(global_ids)]
        if np.any(loc < 0):
            raise InvalidArgumentError("cell not in support")
        return loc

    def contains(self, global_ids):
        return self.mask[np.asarray(global_ids)]


def _or_reduce_pairs(mask, axis):
    """OR of the two slabs offset by one step along `axis`."""
    lo = [slice(None)] * 3
    hi = [slice(None)] * 3
    lo[axis] = slice(0, -1)
    hi[axis] = slice(1, None)
    return mask[tuple(lo)] | mask[tuple(hi)]


def compute_support(sampled: SampledField, k: int, bc: str) -> Support:
    """Classify k-cells for one boundary condition."""
    if not 0 <= k <= 3:
        raise InvalidArgumentError(f"degree must be in 0..3, got {k}")
    if bc not in ("normal", "tangential"):
        raise InvalidArgumentError(f"bc must be 'normal' or 'tangential', got {bc!r}")
    grid = sampled.grid
    blocks = []
    if bc == "normal":
        inside = sampled.inside_primal
        for subset in AXIS_SUBSETS[k]:
            m = inside
            for a in subset:
                m = _or_reduce_pairs(m, a)
            blocks.append(m.ravel(order="F"))
    else:
        inside = sampled.inside_dual_padded
        for subset in AXIS_SUBSETS[k]:
            m = inside
            for a in _complement(subset):
                m = _or_reduce_pairs(m, a)
            # spanned axes read the padded lattice at the fixed offset v_a + 1
            sl = tuple(
                slice(1, grid.dims[a]) if a in subset else slice(None) for a in range(3)
            )
            blocks.append(m[sl].ravel(order="F"))
    mask = np.concatenate(blocks) if blocks else np.zeros(0, dtype=bool)
    assert mask.size == grid.num_cells(k)
    return Support(bc=bc, degree=k, mask=mask)


def projection_matrix(support: Support) -> sp.csr_matrix:
    """0/1 selection matrix: support-local rows, global k-cell columns."""
    n = support.size
    return sp.csr_matrix(
        (np.ones(n), (np.arange(n), support.member_ids)),
        shape=(n, support.mask.size),
    )


def restrict_rows_cols(matrix: sp.spmatrix, row_support: Support, col_support: Support):
    """P_row @ matrix @ P_col^T without forming the projections."""
    return matrix.tocsr()[row_support.member_ids][:, col_support.member_ids].tocsr()


def supports_nested(inner: Support, outer: Support) -> bool:
    return bool(np.all(outer.mask[inner.member_ids]))
