"""Kernel dimensions and small eigenvalues of the assembled Laplacians.

The solver works on the symmetrized operator (diagonal metric folded in),
uses dense decompositions below a size cutoff and shift-invert Lanczos
above it, and separates the kernel with a Gershgorin-scaled threshold.
A dense brute-force oracle and a union-find component oracle back the
spectral results in tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.ndimage
import scipy.sparse as sp
import scipy.sparse.csgraph
import scipy.sparse.linalg as spla

from .errors import InvalidArgumentError, SolverError
from .laplacian import OperatorSet
from .levelset import SampledField

DENSE_CUTOFF = 2000
ORACLE_LIMIT = 2000
RESIDUAL_TOL = 1e-10


@dataclass
class SpectrumSummary:
    """Kernel dimension plus the smallest non-zero eigenvalues."""

    degree: int | None
    bc: str | None
    kind: str | None
    kernel_dim: int
    nonzero_eigenvalues: np.ndarray
    zero_threshold: float
    max_residual: float = 0.0
    meta: dict = field(default_factory=dict)

    def first_nonzero(self):
        return float(self.nonzero_eigenvalues[0]) if len(self.nonzero_eigenvalues) else np.nan


def gershgorin_bound(matrix) -> float:
    """Upper bound on the spectrum: max row sum of absolute values."""
    if matrix.shape[0] == 0:
        return 0.0
    m = sp.csr_matrix(matrix)
    return float(np.max(np.add.reduceat(np.abs(m.data), m.indptr[:-1])) if m.nnz else 0.0)


def _symmetrize_problem(matrix, metric):
    """Fold a positive diagonal metric into the operator."""
    m = sp.csr_matrix(matrix, dtype=float)
    if metric is None:
        return m, None
    s = np.asarray(metric, dtype=float)
    if np.any(s <= 0):
        raise InvalidArgumentError("metric diagonal must be strictly positive")
    d = sp.diags(1.0 / np.sqrt(s))
    return (d @ m @ d).tocsr(), s


def default_zero_threshold(symmetrized) -> float:
    return 1e-9 * max(1.0, gershgorin_bound(symmetrized))


def _dense_smallest(dense, count):
    hi = min(dense.shape[0], count) - 1
    return scipy.linalg.eigh(dense, subset_by_index=[0, hi])


def _shift_invert_smallest(sym, count, bound):
    """Smallest `count` eigenpairs via shift-invert Lanczos at a negative shift."""
    n = sym.shape[0]
    count = min(count, n - 1)
    sigma = -1e-5 * max(1.0, bound)
    try:
        vals, vecs = spla.eigsh(sym, k=count, sigma=sigma, which="LM")
    except spla.ArpackNoConvergence as exc:
        got = len(exc.eigenvalues)
        raise SolverError(
            f"eigensolver converged only {got}/{count} pairs",
            diagnostics={"converged": got, "requested": count, "n": n},
        ) from exc
    order = np.argsort(vals)
    return vals[order], vecs[:, order]


def spectrum(matrix, want_nonzero: int, metric=None, degree=None, bc=None,
             kind=None, dense_cutoff: int = DENSE_CUTOFF,
             zero_threshold: float | None = None) -> SpectrumSummary:
    """Kernel dimension and the next `want_nonzero` eigenvalues, ascending.

    `metric` is an optional positive diagonal turning the problem into
    L W = lambda S W.  Dense solve below `dense_cutoff`, shift-invert Lanczos
    above, growing the request until enough non-zero eigenvalues are seen.
    """
    sym, s = _symmetrize_problem(matrix, metric)
    n = sym.shape[0]
    if n == 0:
        return SpectrumSummary(degree, bc, kind, 0, np.zeros(0), 0.0)
    bound = gershgorin_bound(sym)
    thr = default_zero_threshold(sym) if zero_threshold is None else zero_threshold

    dense = sym.toarray() if n <= dense_cutoff else None
    count = min(n, want_nonzero + 8)
    while True:
        if dense is not None:
            vals, vecs = _dense_smallest(dense, count)
            exhausted = count >= n
        else:
            k_req = min(n - 1, count)
            vals, vecs = _shift_invert_smallest(sym, k_req, bound)
            exhausted = k_req >= n - 1
        kernel = int(np.sum(vals < thr))
        if len(vals) - kernel >= want_nonzero or exhausted:
            break
        count = min(n, max(kernel + want_nonzero + 8, 2 * count))
    take = slice(kernel, kernel + want_nonzero)
    resid = _max_residual(sym, vals[take], vecs[:, take])
    return SpectrumSummary(
        degree, bc, kind, kernel, np.asarray(vals[take]), thr, resid,
        meta={"requested": int(len(vals))},
    )


def _max_residual(sym, vals, vecs):
    if vecs.size == 0:
        return 0.0
    scale = max(1.0, gershgorin_bound(sym))
    r = sym @ vecs - vecs * vals[None, :]
    return float(np.max(np.linalg.norm(r, axis=0) / (scale * np.linalg.norm(vecs, axis=0))))


def dense_oracle(matrix, metric=None):
    """Full ascending (generalized) spectrum by dense decomposition."""
    n = matrix.shape[0]
    if n > ORACLE_LIMIT:
        raise InvalidArgumentError(f"dense oracle limited to {ORACLE_LIMIT}, got {n}")
    if n == 0:
        return np.zeros(0)
    a = sp.csr_matrix(matrix).toarray()
    a = 0.5 * (a + a.T)
    if metric is None:
        return scipy.linalg.eigh(a, eigvals_only=True)
    b = np.diag(np.asarray(metric, dtype=float))
    return scipy.linalg.eigh(a, b, eigvals_only=True)


def laplacian_spectrum(ops: OperatorSet, k: int, kind: str, want_nonzero: int = 10,
                       **kw) -> SpectrumSummary:
    """Spectrum of one assembled Laplacian through the generalized problem."""
    lap = ops.laplacian(k, kind)
    return spectrum(lap, want_nonzero, metric=ops.metric(k, kind),
                    degree=k, bc=ops.bc, kind=kind, **kw)


# ---- independent component oracles ---------------------------------------


def vertex_component_count(sampled: SampledField) -> int:
    """Connected components of inside vertices under 6-neighbor adjacency."""
    structure = scipy.ndimage.generate_binary_structure(3, 1)
    _, count = scipy.ndimage.label(sampled.inside_primal, structure=structure)
    return int(count)


def cell_component_labels(sampled: SampledField):
    """Face-connected components of the normal 3-support.

    Adjacency requires the shared face to carry an inside vertex, matching
    the kernel structure of the degree-3 normal Laplacian.  Returns
    (labels over 3-support members in global cell order, component count).
    """
    from .supports import compute_support

    sup3 = compute_support(sampled, 3, "normal")
    sup2 = compute_support(sampled, 2, "normal")
    n = sup3.size
    if n == 0:
        return np.zeros(0, dtype=int), 0
    d2 = sampled.grid.differential(2).tocsc()
    start = d2.indptr[sup2.member_ids]
    counts = d2.indptr[sup2.member_ids + 1] - start
    two = counts == 2  # interior faces; grid-boundary faces have one coface
    c0 = d2.indices[start[two]]
    c1 = d2.indices[start[two] + 1]
    g2l3 = sup3._global_to_local
    l0, l1 = g2l3[c0], g2l3[c1]
    keep = (l0 >= 0) & (l1 >= 0)
    adj = sp.coo_matrix(
        (np.ones(int(keep.sum())), (l0[keep], l1[keep])), shape=(n, n)
    )
    count, labels = scipy.sparse.csgraph.connected_components(adj, directed=False)
    return labels, int(count)


def component_cell_counts(sampled: SampledField):
    """Number of 3-support cells in each face-connected component."""
    labels, count = cell_component_labels(sampled)
    if count == 0:
        return np.zeros(0, dtype=int)
    return np.bincount(labels, minlength=count)


# ---- T / C / N split -------------------------------------------------------


@dataclass
class TCNSplit:
    """Squared non-zero singular values of the three symmetrized differentials
    under the normal boundary condition: T from degree 2, C from degree 1,
    N from degree 0."""

    T: np.ndarray
    C: np.ndarray
    N: np.ndarray


def _scaled_differential(ops: OperatorSet, k: int, kind: str):
    """Dbar_k for the hodge kind, the plain restricted D_k for big."""
    if kind == "hodge":
        return ops.symmetrized_differential(k)
    return ops.differential(k).astype(float)


def _sym_laplacian(ops: OperatorSet, k: int, kind: str):
    return ops.symmetrized_laplacian(k) if kind == "hodge" else ops.laplacian(k, "big")


def tcn_split(ops: OperatorSet, kind: str = "big",
              zero_threshold: float | None = None) -> TCNSplit:
    """Full split via dense SVD; sizes must stay within the oracle limit."""
    if ops.bc != "normal":
        raise InvalidArgumentError("tcn_split expects a normal-bc OperatorSet")
    out = {}
    for name, k in (("T", 2), ("C", 1), ("N", 0)):
        db = _scaled_differential(ops, k, kind) if ops.size(k) and ops.size(k + 1) else None
        if db is None or min(db.shape) == 0:
            out[name] = np.zeros(0)
            continue
        if max(db.shape) > ORACLE_LIMIT:
            raise InvalidArgumentError("tcn_split is a dense oracle; instance too large")
        sv = scipy.linalg.svd(db.toarray(), compute_uv=False)
        sq = np.sort(sv) ** 2
        thr = zero_threshold
        if thr is None:
            thr = default_zero_threshold(db.T @ db)
        out[name] = sq[sq > thr]
    return TCNSplit(**out)


def leading_tcn(ops: OperatorSet, count: int = 1, kind: str = "big"):
    """Smallest non-zero values of each of T, C, N without dense SVD.

    T and N are read off the degree-3 and degree-0 operators whose kernels
    are small (beta_0 and beta_3).  C values are extracted from the degree-2
    operator, whose spectrum is T + C + zeros, by classifying eigenvectors
    with the dominant factor.
    """
    res = {}
    t_sum = spectrum(_sym_laplacian(ops, 3, kind), count, degree=3, bc=ops.bc, kind=kind)
    res["T"] = np.asarray(t_sum.nonzero_eigenvalues)
    n_sum = spectrum(_sym_laplacian(ops, 0, kind), count, degree=0, bc=ops.bc, kind=kind)
    res["N"] = np.asarray(n_sum.nonzero_eigenvalues)
    res["C"] = _leading_c_values(ops, count, kind)
    return res["T"], res["C"], res["N"], t_sum.kernel_dim


def _leading_c_values(ops: OperatorSet, count: int, kind: str = "big"):
    """Smallest `count` non-zero C-values from the degree-2 operator."""
    lbar2 = _sym_laplacian(ops, 2, kind)
    n = lbar2.shape[0]
    if n == 0:
        return np.zeros(0)
    db2 = _scaled_differential(ops, 2, kind)
    db1 = _scaled_differential(ops, 1, kind)
    thr = default_zero_threshold(lbar2)
    bound = gershgorin_bound(lbar2)
    dense = lbar2.toarray() if n <= DENSE_CUTOFF else None
    want = count + 8
    while True:
        if dense is not None:
            vals, vecs = _dense_smallest(dense, min(n, 4 * want + 16))
            exhausted = len(vals) >= n
        else:
            k_req = min(n - 1, want)
            vals, vecs = _shift_invert_smallest(lbar2, k_req, bound)
            exhausted = k_req >= n - 1
        c_vals = []
        for i in range(len(vals)):
            if vals[i] < thr:
                continue
            v = vecs[:, i]
            up = np.linalg.norm(db2 @ v) ** 2
            down = np.linalg.norm(db1.T @ v) ** 2
            if down >= up:
                c_vals.append(vals[i])
            if len(c_vals) >= count:
                return np.asarray(c_vals)
        if exhausted:
            return np.asarray(c_vals)
        want *= 2


def betti_numbers(ops: OperatorSet, kind: str = "big"):
    """(beta_0, beta_1, beta_2) from the kernels of L_3, L_2, L_1 under the
    normal boundary condition (dim ker L_{k,n} = beta_{3-k})."""
    if ops.bc != "normal":
        raise InvalidArgumentError("betti_numbers expects the normal boundary condition")
    out = []
    for k in (3, 2, 1):
        summ = laplacian_spectrum(ops, k, kind, want_nonzero=1)
        out.append(summ.kernel_dim)
    return tuple(out)


def sweep_level(ops: OperatorSet, eig_count: int = 1, kind: str = "big"):
    """Betti triple and first non-zero T/C/N values for one sublevel set."""
    t_sum = spectrum(_sym_laplacian(ops, 3, kind), eig_count, degree=3, bc=ops.bc, kind=kind)
    n_sum = spectrum(_sym_laplacian(ops, 0, kind), eig_count, degree=0, bc=ops.bc, kind=kind)
    c_vals = _leading_c_values(ops, eig_count, kind)
    beta1 = spectrum(_sym_laplacian(ops, 2, kind), 0, degree=2, bc=ops.bc, kind=kind).kernel_dim
    beta2 = spectrum(_sym_laplacian(ops, 1, kind), 0, degree=1, bc=ops.bc, kind=kind).kernel_dim
    return {
        "beta0": t_sum.kernel_dim,
        "beta1": beta1,
        "beta2": beta2,
        "lambda_T1": float(t_sum.nonzero_eigenvalues[0]) if len(t_sum.nonzero_eigenvalues) else np.nan,
        "lambda_C1": float(c_vals[0]) if len(c_vals) else np.nan,
        "lambda_N1": float(n_sum.nonzero_eigenvalues[0]) if len(n_sum.nonzero_eigenvalues) else np.nan,
        "T": np.asarray(t_sum.nonzero_eigenvalues),
        "C": np.asarray(c_vals),
        "N": np.asarray(n_sum.nonzero_eigenvalues),
    }


def kernel_dim_by_rank(ops: OperatorSet, k: int) -> int:
    """Kernel dimension from dense SVD ranks of the adjacent symmetrized
    differentials; desk-scale cross-check for the spectral count."""
    n = ops.size(k)
    if n == 0:
        return 0
    rank = 0
    for deg in (k, k - 1):
        if 0 <= deg <= 2 and ops.size(deg) and ops.size(deg + 1):
            db = ops.symmetrized_differential(deg)
            if max(db.shape) > ORACLE_LIMIT:
                raise InvalidArgumentError("rank cross-check limited to desk scale")
            sv = scipy.linalg.svd(db.toarray(), compute_uv=False)
            thr = np.sqrt(default_zero_threshold(db.T @ db))
            rank += int(np.sum(sv > thr))
    return n - rank


def write_spectrum_records(path, records):
    """One line per (isovalue, degree, kind): kernel_dim and eigenvalues."""
    with open(path, "w") as fh:
        for rec in records:
            eigs = " ".join(repr(float(v)) for v in rec["eigenvalues"])
            fh.write(
                "isovalue={!r} k={} bc={} kind={} kernel_dim={} eigenvalues=[{}]\n".format(
                    rec.get("isovalue"), rec.get("k"), rec.get("bc"),
                    rec.get("kind"), rec.get("kernel_dim"), eigs,
                )
            )
    return path
