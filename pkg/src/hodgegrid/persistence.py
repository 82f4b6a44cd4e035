"""Filtrations, discrete harmonic extension, and persistent Laplacians.

A Filtration samples one level-set function at ascending isovalues and keeps
per-level normal-bc operator sets.  Extending a k-form from level l to level
l+p fills the new k-cells with d of a potential solved on the new (k-1)-cells
from the band system

    (A^T S_B A) zeta = -E^T S^l omega,

where A and E are the level-(l+p) differential restricted to (new k-cells x
new potentials) and (old k-cells x new potentials).  Driving the system with
the level-l star is the volume rescaling of the boundary values; it makes
the extended form exactly coclosed at the new cells, which in turn makes the
persistent codifferential satisfy delta_{l,p} o delta_l = 0 and its adjoint
D_l o D_{l,p} = 0 up to solver accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import HodgeGridError, InvalidArgumentError
from .grid import GridComplex
from .laplacian import OperatorSet, _sym
from .levelset import SampledField, ScalarField
from .spectra import SpectrumSummary, spectrum
from .stars import DEFAULT_SUBSAMPLES

DENSE_BAND_LIMIT = 3000


class Filtration:
    """Nested normal-bc complexes over ascending isovalues of one field."""

    def __init__(self, field_or_levels, grid: GridComplex = None, isovalues=None,
                 subsamples: int = DEFAULT_SUBSAMPLES):
        if isinstance(field_or_levels, ScalarField):
            if grid is None or isovalues is None:
                raise InvalidArgumentError("Filtration from a field needs grid and isovalues")
            isovalues = [float(c) for c in isovalues]
            if len(isovalues) < 1:
                raise InvalidArgumentError("need at least one isovalue")
            if any(b <= a for a, b in zip(isovalues, isovalues[1:])):
                raise InvalidArgumentError("isovalues must be strictly ascending")
            self.field = field_or_levels
            self.grid = grid
            primal_raw = self.field(grid.vertex_positions()).reshape(grid.dims, order="F")
            dual_raw = self.field(grid.dual_point_positions())
            self.levels = [
                SampledField(grid, primal_raw, dual_raw, c) for c in isovalues
            ]
        else:
            self.levels = list(field_or_levels)
            self.field = None
            self.grid = self.levels[0].grid
            isovalues = [s.isovalue for s in self.levels]
        self.isovalues = list(isovalues)
        self.subsamples = subsamples
        self._ops = [None] * len(self.levels)
        self._verify_nested()

    def __len__(self):
        return len(self.levels)

    def _verify_nested(self):
        for a, b in zip(self.levels, self.levels[1:]):
            for k in range(4):
                from .supports import compute_support, supports_nested

                if not supports_nested(
                    compute_support(a, k, "normal"), compute_support(b, k, "normal")
                ):
                    raise HodgeGridError(
                        "internal error: supports not nested along the filtration"
                    )

    def operator_set(self, l) -> OperatorSet:
        if not 0 <= l < len(self.levels):
            raise InvalidArgumentError(f"level {l} out of range")
        if self._ops[l] is None:
            self._ops[l] = OperatorSet(self.levels[l], "normal", self.subsamples)
        return self._ops[l]


def build_filtration(field: ScalarField, grid: GridComplex, isovalues,
                     subsamples: int = DEFAULT_SUBSAMPLES) -> Filtration:
    return Filtration(field, grid, isovalues, subsamples)


@dataclass
class ExtensionOperator:
    """Discrete harmonic extension of k-forms from level l to level l+p.

    `matrix` maps level-l support coefficients to level-(l+p) support
    coefficients; rows over surviving cells are diagonal (volume-ratio
    rescaled), rows over new cells are the harmonic fill-in.
    """

    l: int
    p: int
    degree: int
    kind: str
    matrix: sp.spmatrix
    rescale: np.ndarray
    new_cells: np.ndarray       # level-(l+p) local indices of the new k-cells
    potential_cells: np.ndarray  # level-(l+p) local indices of new (k-1)-cells
    boundary_cells: np.ndarray   # level-l local indices driving the extension
    solver_residual: float = 0.0

    @property
    def extension_block(self):
        """Dense block of extension values on the new cells (new x boundary)."""
        return self._block

    def apply(self, omega):
        return self.matrix @ np.asarray(omega)


RANK_CUTOFF = 1e-10


def _minnorm_lstsq(at_mat, rhs, dense_limit=DENSE_BAND_LIMIT):
    """Minimum-norm least squares solution of at_mat @ Y = rhs (multi-RHS).

    Dense SVD-based solve for band-sized systems, column-wise LSMR above the
    limit.  The explicit relative rank cutoff matters: the band operator has
    exact-zero singular values that float to ~1e-13; inverting them would
    destroy the linearity that makes coexact inputs extend consistently.
    """
    nz, nb = at_mat.shape
    if rhs.size == 0 or nb == 0:
        return np.zeros((nb, rhs.shape[1]))
    if max(nz, nb) <= dense_limit:
        sol, *_ = scipy.linalg.lstsq(
            at_mat.toarray(), rhs, cond=RANK_CUTOFF, lapack_driver="gelsd"
        )
        return sol
    out = np.zeros((nb, rhs.shape[1]))
    for j in range(rhs.shape[1]):
        out[:, j] = spla.lsmr(
            at_mat, rhs[:, j], atol=1e-13, btol=1e-13, conlim=1.0 / RANK_CUTOFF
        )[0]
    return out


def extension_operator(filtration: Filtration, l: int, p: int, k: int,
                       kind: str = "hodge",
                       dense_limit: int = DENSE_BAND_LIMIT) -> ExtensionOperator:
    """Build I_{l,p} for degree-k forms under the normal boundary condition.

    For k >= 1 the potential lives on the new (k-1)-cells; for k = 0 the
    scalar values on new vertices are the harmonic fill directly (old
    vertices keep their values, support restriction enforces zero at the
    outer boundary).
    """
    if l < 0 or p < 0 or l + p >= len(filtration):
        raise InvalidArgumentError(f"(l={l}, p={p}) out of filtration range")
    if not 0 <= k <= 3:
        raise InvalidArgumentError(f"degree must be in 0..3, got {k}")
    if kind not in ("hodge", "big"):
        raise InvalidArgumentError(f"kind must be 'hodge' or 'big', got {kind!r}")
    ops_l = filtration.operator_set(l)
    ops_lp = filtration.operator_set(l + p)
    sup_l = ops_l.supports[k]
    sup_lp = ops_lp.supports[k]
    n_l, n_lp = sup_l.size, sup_lp.size
    o_lp = sup_lp.local_index(sup_l.member_ids) if n_l else np.zeros(0, dtype=np.int64)
    new_mask = sup_lp.mask.copy()
    new_mask[sup_l.member_ids] = False
    b_lp = sup_lp.local_index(np.flatnonzero(new_mask))

    if kind == "hodge" and n_l:
        rescale = ops_l.star_diag(k) / ops_lp.star_diag(k)[o_lp]
    else:
        rescale = np.ones(n_l)

    rows = [o_lp]
    cols = [np.arange(n_l)]
    vals = [rescale]
    residual = 0.0
    boundary = np.zeros(0, dtype=np.int64)
    z_lp = np.zeros(0, dtype=np.int64)
    block = np.zeros((len(b_lp), 0))

    if len(b_lp):
        if k >= 1:
            sup_l_m = ops_l.supports[k - 1]
            sup_lp_m = ops_lp.supports[k - 1]
            zmask = sup_lp_m.mask.copy()
            zmask[sup_l_m.member_ids] = False
            z_lp = sup_lp_m.local_index(np.flatnonzero(zmask))
            d = ops_lp.differential(k - 1).tocsr().astype(float)
            a_mat = d[b_lp][:, z_lp]
            e_mat = d[o_lp][:, z_lp] if n_l else sp.csr_matrix((0, len(z_lp)))
            s_b = ops_lp.star_diag(k)[b_lp] if kind == "hodge" else np.ones(len(b_lp))
            s_o = ops_l.star_diag(k) if kind == "hodge" else np.ones(n_l)
            bnd = np.flatnonzero(np.diff(e_mat.indptr))
            boundary = bnd
            if len(z_lp) and len(bnd):
                # min-norm Y with Atilde^T Y = rhs; the new-cell values are
                # S_B^{-1/2} Y, reproducing A (A^T S_B A)^+ rhs.
                at_mat = (sp.diags(np.sqrt(s_b)) @ a_mat).T.tocsr()
                rhs = -(e_mat[bnd].T.toarray()) * s_o[bnd][None, :]
                y_sol = _minnorm_lstsq(at_mat, rhs, dense_limit)
                block = y_sol / np.sqrt(s_b)[:, None]
                residual = float(
                    np.linalg.norm(at_mat @ y_sol - rhs)
                    / max(1e-300, np.linalg.norm(rhs))
                ) if rhs.size else 0.0
        else:
            # scalar harmonic fill: least-squares gradient match over the
            # level-(l+p) edges; old vertices keep their values, support
            # restriction enforces zero outside
            z_lp = b_lp
            d = ops_lp.differential(0).tocsr().astype(float)
            a_csr = d[:, b_lp].tocsr()
            touched = np.flatnonzero(np.diff(a_csr.indptr))  # edges with a new endpoint
            e_sub = d[touched][:, o_lp].tocoo() if n_l else sp.coo_matrix((len(touched), 0))
            bnd = np.unique(e_sub.col)
            boundary = bnd
            if len(bnd) and len(touched):
                s_e = ops_lp.star_diag(1)[touched] if kind == "hodge" else np.ones(len(touched))
                sq = sp.diags(np.sqrt(s_e))
                atil = (sq @ a_csr[touched]).tocsr()
                rhs = -(sq @ e_sub.tocsr()[:, bnd]).toarray()
                block = _minnorm_lstsq(atil, rhs, dense_limit)
                residual = float(
                    np.linalg.norm(atil @ block - rhs) / max(1e-300, np.linalg.norm(rhs))
                ) if rhs.size else 0.0
        if block is not None and block.size:
            cc, rr = np.meshgrid(boundary, b_lp)
            rows.append(rr.ravel())
            cols.append(cc.ravel())
            vals.append(np.asarray(block).ravel())
        else:
            block = np.zeros((len(b_lp), len(boundary)))

    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n_lp, n_l),
    ).tocsr()
    ext = ExtensionOperator(
        l=l, p=p, degree=k, kind=kind, matrix=mat, rescale=rescale,
        new_cells=b_lp, potential_cells=z_lp, boundary_cells=boundary,
        solver_residual=residual,
    )
    ext._block = block
    return ext


@dataclass
class PersistentPair:
    """Persistent operators and spectra for one (l, p, k).

    `codifferentials[kind]` is delta_{l,p} = delta_{l+p} o I_{l,p} and
    `differentials[kind]` its adjoint under the level inner products.
    """

    l: int
    p: int
    degree: int
    laplacians: dict
    metrics: dict
    codifferentials: dict
    differentials: dict
    extensions: dict
    summaries: dict = field(default_factory=dict)

    def laplacian(self, kind="hodge"):
        return self.laplacians[kind]

    def summary(self, kind="hodge", want_nonzero: int = 6) -> SpectrumSummary:
        key = (kind, want_nonzero)
        if key not in self.summaries:
            self.summaries[key] = spectrum(
                self.laplacians[kind], want_nonzero, metric=self.metrics[kind],
                degree=self.degree, bc="normal", kind=f"persistent-{kind}",
            )
        return self.summaries[key]

    @property
    def kernel_dim(self):
        return self.summary().kernel_dim


def persistent_operators(filtration: Filtration, l: int, p: int, k: int,
                         dense_limit: int = DENSE_BAND_LIMIT) -> PersistentPair:
    """Assemble persistent Hodge and BIG Laplacians at degree k.

    hodge: L = I^T S D S^{-1} D^T S I + (D^l_k)^T S^l_{k+1} D^l_k,
           generalized against S^l_k;
    big:   L = I^T D D^T I + (D^l_k)^T D^l_k with the star-free extension.
    """
    ops_l = filtration.operator_set(l)
    ops_lp = filtration.operator_set(l + p)
    n_l = ops_l.size(k)
    laps, mets, exts, codiffs, diffs = {}, {}, {}, {}, {}
    for kind in ("hodge", "big"):
        ext = extension_operator(filtration, l, p, k, kind, dense_limit)
        exts[kind] = ext
        imat = ext.matrix
        acc = sp.csr_matrix((n_l, n_l))
        if k >= 1:
            d = ops_lp.differential(k - 1).astype(float)
            if kind == "hodge":
                s_k = sp.diags(ops_lp.star_diag(k))
                s_km_inv = sp.diags(1.0 / ops_lp.star_diag(k - 1))
                half = (d.T @ s_k @ imat).tocsr()  # D^T S I
                acc = acc + half.T @ s_km_inv @ half
                codiffs[kind] = (s_km_inv @ half).tocsr()
                diffs[kind] = (
                    sp.diags(1.0 / ops_l.star_diag(k)) @ imat.T @ s_k @ d
                ).tocsr()
            else:
                half = (d.T @ imat).tocsr()
                acc = acc + half.T @ half
                codiffs[kind] = half
                diffs[kind] = (imat.T @ d).tocsr()
        else:
            codiffs[kind] = sp.csr_matrix((0, n_l))
            diffs[kind] = sp.csr_matrix((n_l, 0))
        if k <= 2:
            du = ops_l.differential(k).astype(float)
            if kind == "hodge":
                acc = acc + du.T @ sp.diags(ops_l.star_diag(k + 1)) @ du
            else:
                acc = acc + du.T @ du
        laps[kind] = _sym(acc)
        mets[kind] = ops_l.star_diag(k) if kind == "hodge" else None
    return PersistentPair(
        l=l, p=p, degree=k, laplacians=laps, metrics=mets,
        codifferentials=codiffs, differentials=diffs, extensions=exts,
    )


def persistent_summary(filtration: Filtration, l: int, p: int, degrees,
                       want_nonzero: int = 6, kind: str = "hodge"):
    """SpectrumSummary per requested degree for one (l, p)."""
    out = []
    for k in degrees:
        pair = persistent_operators(filtration, l, p, k)
        out.append(pair.summary(kind, want_nonzero))
    return out


def filtration_sweep(filtration: Filtration, eig_count: int = 1, kind: str = "big"):
    """Per-isovalue rows of (beta_0, beta_1, beta_2, lambda_T1, lambda_C1,
    lambda_N1) matching the figure-panel CSV layout."""
    from .spectra import sweep_level

    rows = []
    for l, isovalue in enumerate(filtration.isovalues):
        row = {"isovalue": isovalue}
        row.update(sweep_level(filtration.operator_set(l), eig_count, kind))
        rows.append(row)
    return rows


SWEEP_COLUMNS = ("isovalue", "beta0", "beta1", "beta2",
                 "lambda_T1", "lambda_C1", "lambda_N1")


def write_sweep_csv(path, rows):
    """Plot-ready CSV of the filtration sweep."""
    with open(path, "w") as fh:
        fh.write(",".join(SWEEP_COLUMNS) + "\n")
        for row in rows:
            cells = []
            for col in SWEEP_COLUMNS:
                v = row[col]
                cells.append(str(int(v)) if col.startswith("beta") else repr(float(v)))
            fh.write(",".join(cells) + "\n")
    return path


def write_persistence_records(path, records):
    """One structured-text record per (l, p, k)."""
    with open(path, "w") as fh:
        for rec in records:
            eigs = " ".join(repr(float(v)) for v in rec["eigenvalues"])
            fh.write(
                "l={} p={} k={} kind={} kernel_dim={} eigenvalues=[{}]\n".format(
                    rec["l"], rec["p"], rec["k"], rec.get("kind", "hodge"),
                    rec["kernel_dim"], eigs,
                )
            )
    return path
