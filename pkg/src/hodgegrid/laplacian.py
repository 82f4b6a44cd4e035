"""Restricted differentials and Hodge / BIG Laplacian assembly.

An OperatorSet bundles, for one sampled field and one boundary condition,
the per-degree supports, restricted differentials D_k = P_{k+1} D^I_k P_k^T,
diagonal stars, and lazily assembled Laplacians:

    hodge:  L_k = D_k^T S_{k+1} D_k + S_k D_{k-1} S_{k-1}^{-1} D_{k-1}^T S_k
    big:    L_k = D_k^T D_k + D_{k-1} D_{k-1}^T

Terms with k-1 < 0 or k+1 > 3 are dropped.  The symmetrized differentials
Dbar_k = S_{k+1}^{1/2} D_k S_k^{-1/2} turn the generalized problem
(L_k, S_k) into an ordinary symmetric one.
"""

from __future__ import annotations

import scipy.sparse as sp

from .errors import InvalidArgumentError
from .levelset import SampledField
from .stars import DEFAULT_SUBSAMPLES, HodgeStar, hodge_star
from .supports import Support, compute_support, restrict_rows_cols


def _sym(mat):
    """Remove floating-point asymmetry; assembled operators are symmetric."""
    mat = mat.tocsr()
    return (mat + mat.T) * 0.5


class OperatorSet:
    """Operators of one boundary condition on one sampled sublevel set."""

    def __init__(self, sampled: SampledField, bc: str = "normal",
                 subsamples: int = DEFAULT_SUBSAMPLES):
        if bc not in ("normal", "tangential"):
            raise InvalidArgumentError(f"bc must be 'normal' or 'tangential', got {bc!r}")
        self.sampled = sampled
        self.grid = sampled.grid
        self.bc = bc
        self.subsamples = subsamples
        self.supports = [compute_support(sampled, k, bc) for k in range(4)]
        self._diff = {}
        self._stars = {}
        self._lap = {}
        self._sym_diff = {}

    # ---- building blocks ---------------------------------------------------

    def size(self, k):
        return self.supports[k].size

    def differential(self, k):
        """Restricted differential D_k from k-support to (k+1)-support."""
        if not 0 <= k <= 2:
            raise InvalidArgumentError(f"differential degree must be in 0..2, got {k}")
        if k not in self._diff:
            self._diff[k] = restrict_rows_cols(
                self.grid.differential(k), self.supports[k + 1], self.supports[k]
            )
        return self._diff[k]

    def star(self, k) -> HodgeStar:
        if k not in self._stars:
            self._stars[k] = hodge_star(
                self.sampled, k, self.bc, self.supports[k], self.subsamples
            )
        return self._stars[k]

    def star_diag(self, k):
        return self.star(k).diagonal

    def symmetrized_differential(self, k):
        """Dbar_k = S_{k+1}^(1/2) D_k S_k^(-1/2), float CSR."""
        if k not in self._sym_diff:
            d = self.differential(k).astype(float)
            left = sp.diags(self.star(k + 1).sqrt())
            right = sp.diags(1.0 / self.star(k).sqrt())
            self._sym_diff[k] = (left @ d @ right).tocsr()
        return self._sym_diff[k]

    # ---- assembled operators ------------------------------------------------

    def laplacian(self, k, kind="hodge"):
        """Assemble (and cache) the degree-k Laplacian of the given kind."""
        if not 0 <= k <= 3:
            raise InvalidArgumentError(f"degree must be in 0..3, got {k}")
        if kind not in ("hodge", "big"):
            raise InvalidArgumentError(f"kind must be 'hodge' or 'big', got {kind!r}")
        key = (k, kind)
        if key not in self._lap:
            n = self.size(k)
            acc = sp.csr_matrix((n, n))
            if kind == "hodge":
                if k <= 2:
                    d = self.differential(k).astype(float)
                    acc = acc + d.T @ sp.diags(self.star_diag(k + 1)) @ d
                if k >= 1:
                    dm = self.differential(k - 1).astype(float)
                    sk = sp.diags(self.star_diag(k))
                    inv = sp.diags(1.0 / self.star_diag(k - 1))
                    acc = acc + sk @ dm @ inv @ dm.T @ sk
            else:
                if k <= 2:
                    d = self.differential(k).astype(float)
                    acc = acc + d.T @ d
                if k >= 1:
                    dm = self.differential(k - 1).astype(float)
                    acc = acc + dm @ dm.T
            self._lap[key] = _sym(acc)
        return self._lap[key]

    def symmetrized_laplacian(self, k):
        """Lbar_k = Dbar_k^T Dbar_k + Dbar_{k-1} Dbar_{k-1}^T.

        Its eigenvalues equal the generalized eigenvalues of (L_k, S_k); with
        identity stars it coincides with the BIG Laplacian.
        """
        if not 0 <= k <= 3:
            raise InvalidArgumentError(f"degree must be in 0..3, got {k}")
        n = self.size(k)
        acc = sp.csr_matrix((n, n))
        if k <= 2:
            db = self.symmetrized_differential(k)
            acc = acc + db.T @ db
        if k >= 1:
            dbm = self.symmetrized_differential(k - 1)
            acc = acc + dbm @ dbm.T
        return _sym(acc)

    def metric(self, k, kind="hodge"):
        """Diagonal of the inner product for the generalized problem, or None
        for the BIG kind."""
        if kind == "big":
            return None
        return self.star_diag(k)

    def codifferential(self, k):
        """delta_k = S_{k-1}^{-1} D_{k-1}^T S_k (maps k-forms to (k-1)-forms)."""
        if not 1 <= k <= 3:
            raise InvalidArgumentError(f"codifferential degree must be in 1..3, got {k}")
        dm = self.differential(k - 1).astype(float)
        return (sp.diags(1.0 / self.star_diag(k - 1)) @ dm.T @ sp.diags(self.star_diag(k))).tocsr()


def restricted_differential(grid, support_k: Support, support_k1: Support):
    """P_{k+1} D^I_k P_k^T for a matching pair of supports."""
    if support_k.bc != support_k1.bc:
        raise InvalidArgumentError("supports must share the boundary condition")
    if support_k1.degree != support_k.degree + 1:
        raise InvalidArgumentError("supports must be of consecutive degrees")
    return restrict_rows_cols(grid.differential(support_k.degree), support_k1, support_k)


def export_coordinate_text(matrix, path):
    """Write 'ROWS COLS NNZ' then one 'i j value' line per stored entry."""
    coo = sp.coo_matrix(matrix)
    with open(path, "w") as fh:
        fh.write(f"{coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
        for i, j, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{i} {j} {v!r}\n")
    return path
