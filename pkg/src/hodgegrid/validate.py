"""Fast oracle and property suite behind `hodgegrid validate`.

Each check is small enough to run in seconds; together they exercise the
load-bearing contracts of every module.  Returns (name, ok, detail) tuples.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from . import (
    AtomSite,
    OperatorSet,
    ball_union_sdf,
    build_grid,
    fri_density,
    sample_on_grid,
    sphere_sdf,
)
from .levelset import perturb_values
from .molio import pair_clouds, parse_structure
from .persistence import build_filtration, persistent_operators
from .spectra import (
    betti_numbers,
    default_zero_threshold,
    dense_oracle,
    laplacian_spectrum,
    spectrum,
    tcn_split,
    vertex_component_count,
)
from .supports import compute_support, projection_matrix


def _random_blob_field(rng, count=4, spread=0.5, radius=1.0):
    atoms = [AtomSite(tuple(rng.uniform(-spread, spread, 3)), "C", radius)
             for _ in range(count)]
    return fri_density(atoms, tau=0.6)


def check_grid_counts():
    rng = np.random.default_rng(7)
    for _ in range(5):
        dims = tuple(int(d) for d in rng.integers(2, 7, 3))
        g = build_grid(dims, 0.5)
        for k in range(4):
            expect = 0
            from .grid import AXIS_SUBSETS

            for subset in AXIS_SUBSETS[k]:
                expect += int(np.prod([dims[a] - 1 if a in subset else dims[a]
                                       for a in range(3)]))
            if g.num_cells(k) != expect:
                return False, f"count mismatch dims={dims} k={k}"
    return True, "cell-count formula on 5 random grids"


def check_grid_nilpotency():
    rng = np.random.default_rng(8)
    for _ in range(3):
        dims = tuple(int(d) for d in rng.integers(3, 9, 3))
        g = build_grid(dims, 1.0)
        for k in range(2):
            prod = g.differential(k + 1) @ g.differential(k)
            if prod.nnz and np.abs(prod.data).max() != 0:
                return False, f"D D != 0 on dims={dims}"
    return True, "integer nilpotency of grid differentials"


def check_restricted_nilpotency():
    rng = np.random.default_rng(9)
    field = _random_blob_field(rng)
    g = build_grid((9, 9, 9), 0.35, origin=(-1.4, -1.4, -1.4))
    s = sample_on_grid(field, g, -0.3)
    for bc in ("normal", "tangential"):
        ops = OperatorSet(s, bc)
        for k in range(2):
            prod = ops.differential(k + 1) @ ops.differential(k)
            if prod.nnz and np.abs(prod.data).max() != 0:
                return False, f"restricted D D != 0 for bc={bc} k={k}"
    return True, "restricted nilpotency both boundary conditions"


def check_projection_identity():
    rng = np.random.default_rng(10)
    field = _random_blob_field(rng)
    g = build_grid((8, 8, 8), 0.4, origin=(-1.4, -1.4, -1.4))
    s = sample_on_grid(field, g, -0.3)
    for k in range(4):
        sup = compute_support(s, k, "normal")
        p = projection_matrix(sup)
        eye = (p @ p.T) - sp.eye(sup.size)
        if eye.nnz and np.abs(eye.data).max() > 0:
            return False, f"P P^T != I at k={k}"
    return True, "projection matrices select exactly the support"


def check_star_interior():
    g = build_grid((7, 7, 7), 0.5, origin=(-1.5, -1.5, -1.5))
    s = sample_on_grid(sphere_sdf((0, 0, 0), 1.2), g, 0.0)
    ops = OperatorSet(s, "normal")
    for k in range(4):
        diag = ops.star_diag(k)
        expect = g.spacing ** (3 - 2 * k)
        if not np.any(np.isclose(diag, expect)):
            return False, f"no interior entries at k={k}"
        if np.any(diag <= 0) or not np.all(np.isfinite(diag)):
            return False, f"non-positive star entry at k={k}"
    return True, "uncut star entries equal spacing^(3-2k)"


def check_fri_values():
    atom = AtomSite((0.0, 0.0, 0.0), "C", 1.0)
    f = fri_density([atom], tau=1.0)
    if not np.isclose(f((0.0, 0.0, 0.0)), -1.0):
        return False, "center value"
    if not np.isclose(f((1.0, 0.0, 0.0)), -np.exp(-1.0)):
        return False, "unit-distance value"
    return True, "FRI density point values"


def check_perturbation():
    ell = 1.0
    eps = 1e-5 * ell
    vals = perturb_values(np.array([0.5 + 1e-7, 0.5, 0.2, 0.5 - 1e-7]), 0.5, eps)
    ok = (np.isclose(vals[0], 0.5 + eps) and np.isclose(vals[1], 0.5 + eps)
          and vals[2] == 0.2 and np.isclose(vals[3], 0.5 - eps))
    return ok, "isovalue band pushed to +/- eps with ties outside"


def check_ball_betti():
    g = build_grid((15, 15, 15), 2.6 / 14, origin=(-1.3, -1.3, -1.3))
    s = sample_on_grid(sphere_sdf((0, 0, 0), 1.0), g, 0.0)
    ops = OperatorSet(s, "normal")
    b = betti_numbers(ops, "big")
    if b != (1, 0, 0):
        return False, f"ball betti {b}"
    if vertex_component_count(s) != 1:
        return False, "component oracle"
    return True, "ball betti (1,0,0) and flood-fill oracle agree"


def check_spectrum_union():
    g = build_grid((8, 8, 8), 2.6 / 7, origin=(-1.3, -1.3, -1.3))
    s = sample_on_grid(sphere_sdf((0, 0, 0), 1.0), g, 0.0)
    ops = OperatorSet(s, "normal")
    split = tcn_split(ops, kind="hodge")
    for k, parts in ((1, ("C", "N")), (2, ("T", "C")), (3, ("T",)), (0, ("N",))):
        lbar = ops.symmetrized_laplacian(k)
        full = np.sort(dense_oracle(lbar))
        thr = default_zero_threshold(lbar)
        zeros = int(np.sum(full < thr))
        rebuilt = np.sort(np.concatenate(
            [getattr(split, p) for p in parts] + [np.zeros(zeros)]))
        if len(rebuilt) != len(full):
            return False, f"k={k} dim mismatch"
        if not np.allclose(full, rebuilt, rtol=1e-8, atol=thr):
            return False, f"k={k} multiset mismatch"
    return True, "spectrum of Lbar_k = adjacent singular values + zeros"


def check_duality():
    rng = np.random.default_rng(11)
    field = _random_blob_field(rng)
    g = build_grid((9, 9, 9), 0.35, origin=(-1.4, -1.4, -1.4))
    s = sample_on_grid(field, g, -0.3)
    ops_n = OperatorSet(s, "normal")
    sd = sample_on_grid(field, g.dual_grid(), -0.3)
    ops_t = OperatorSet(sd, "tangential")
    for k in range(4):
        a = dense_oracle(ops_n.laplacian(k, "hodge"), ops_n.metric(k, "hodge"))
        b = dense_oracle(ops_t.laplacian(3 - k, "hodge"), ops_t.metric(3 - k, "hodge"))
        if len(a) != len(b):
            return False, f"k={k} dims {len(a)} vs {len(b)}"
        if not np.allclose(a, b, rtol=1e-8, atol=1e-8 * max(1, abs(a).max())):
            return False, f"k={k} spectra differ"
    return True, "normal spectra match tangential spectra on the dual grid"


def check_persistence():
    field = ball_union_sdf([(-1.2, 0, 0), (1.2, 0, 0)], [0.8, 0.8])
    g = build_grid((14, 9, 9), 0.45, origin=(-2.9, -1.8, -1.8))
    filt = build_filtration(field, g, [0.0, 0.2, 0.55])
    pair0 = persistent_operators(filt, 1, 0, 3)
    ops1 = filt.operator_set(1)
    for kind in ("hodge", "big"):
        dmat = pair0.laplacians[kind] - ops1.laplacian(3, kind)
        if dmat.nnz and np.abs(dmat.data).max() > 1e-12:
            return False, f"p=0 collapse ({kind})"
    pair = persistent_operators(filt, 0, 2, 3)
    if pair.summary("big", 1).kernel_dim != 1:
        return False, "persistent beta0 across merge"
    pair2 = persistent_operators(filt, 0, 2, 2)
    ops0 = filt.operator_set(0)
    delta_l = ops0.differential(2).astype(float).T
    comp = pair2.codifferentials["big"] @ delta_l
    rel = sp.linalg.norm(comp) / max(
        1e-300, sp.linalg.norm(pair2.codifferentials["big"]) * sp.linalg.norm(delta_l))
    if rel > 1e-10:
        return False, f"delta_lp delta_l = {rel:.1e}"
    return True, "p=0 collapse, merge survival, persistent nilpotency"


def check_solver_oracle():
    rng = np.random.default_rng(12)
    g = build_grid((9, 9, 9), 0.35, origin=(-1.4, -1.4, -1.4))
    s = sample_on_grid(_random_blob_field(rng), g, -0.3)
    ops = OperatorSet(s, "normal")
    for k in (1, 3):
        summ = laplacian_spectrum(ops, k, "big", want_nonzero=6, dense_cutoff=1)
        full = dense_oracle(ops.laplacian(k, "big"))
        kern = int(np.sum(full < summ.zero_threshold))
        got = summ.nonzero_eigenvalues
        ref = full[kern : kern + len(got)]
        if kern != summ.kernel_dim:
            return False, f"kernel mismatch k={k}"
        if not np.allclose(got, ref, rtol=1e-8):
            return False, f"eigenvalues drift k={k}"
    return True, "iterative solver agrees with the dense oracle"


def check_parsers():
    xyz = parse_structure("C 0 0 0\nO 1 0 0\n", "xyz", "ligand")
    if len(xyz.atoms) != 2:
        return False, "xyz atom count"
    pdb_line = ("ATOM      1  N   MET A   1      10.000  20.000  30.000"
                "  1.00  0.00           N\n")
    pdb = parse_structure(pdb_line, "pdb-subset", "protein")
    if pdb.atoms[0].element != "N" or pdb.atoms[0].position != (10.0, 20.0, 30.0):
        return False, "pdb record"
    mol2 = parse_structure(
        "@<TRIPOS>MOLECULE\nx\n@<TRIPOS>ATOM\n1 C1 0.0 0.0 0.0 C.3\n", "mol2-subset",
        "ligand")
    if mol2.atoms[0].element != "C":
        return False, "mol2 record"
    clouds = pair_clouds(pdb, xyz)
    if len(clouds) != 40:
        return False, f"{len(clouds)} clouds"
    return True, "xyz/pdb/mol2 parsing and 40 pair clouds"


ALL_CHECKS = (
    ("grid-cell-counts", check_grid_counts),
    ("grid-nilpotency", check_grid_nilpotency),
    ("restricted-nilpotency", check_restricted_nilpotency),
    ("projection-identity", check_projection_identity),
    ("star-interior-entries", check_star_interior),
    ("fri-density-values", check_fri_values),
    ("isovalue-perturbation", check_perturbation),
    ("ball-betti", check_ball_betti),
    ("spectrum-union", check_spectrum_union),
    ("primal-dual-duality", check_duality),
    ("persistence", check_persistence),
    ("solver-vs-oracle", check_solver_oracle),
    ("molecular-parsing", check_parsers),
)


def run_all(verbose_stream=None):
    results = []
    for name, fn in ALL_CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failure, not an abort
            ok, detail = False, f"exception: {exc!r}"
        results.append((name, bool(ok), detail))
        if verbose_stream is not None:
            verbose_stream.write(f"{'PASS' if ok else 'FAIL'} {name}: {detail}\n")
    return results
