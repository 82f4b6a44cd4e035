"""Topological feature vectors for protein-ligand complexes.

Per element pair and per isovalue, the pair cloud's negative-Gaussian
density field is sampled on a grid anchored to the cloud's bounding box,
the degree-3 BIG Laplacian under the normal boundary condition is
assembled, and (beta_0, lambda_1..lambda_k) recorded.  Rows concatenate the
40 pair blocks in fixed order: pair-major, then isovalue, then features.
"""

from __future__ import annotations

import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import ResolutionLimitError
from .grid import build_grid
from .laplacian import OperatorSet
from .levelset import VDW_RADII, fri_density, sample_on_grid
from .molio import (
    DEFAULT_CUTOFF,
    LIGAND_ELEMENTS,
    PROTEIN_ELEMENTS,
    AtomPairCloud,
    MolecularStructure,
    pair_clouds,
)
from .spectra import component_cell_counts, spectrum

DEFAULT_ISOVALUES = tuple(np.linspace(-0.5, -0.001, 9))


@dataclass
class FeatureConfig:
    isovalues: tuple = DEFAULT_ISOVALUES
    k: int = 5
    tau: float = 1.0
    spacing: float = 0.8
    cutoff: float = DEFAULT_CUTOFF
    margin_cells: int = 2
    min_component_cells: int = 8
    max_refinements: int = 2
    threads: int = 1

    def __post_init__(self):
        self.isovalues = tuple(float(c) for c in self.isovalues)
        if len(self.isovalues) < 1:
            raise ValueError("need at least one isovalue")
        if self.k < 0:
            raise ValueError("k must be non-negative")

    @property
    def block_width(self):
        return (self.k + 1) * len(self.isovalues)

    @property
    def row_width(self):
        return self.block_width * len(PROTEIN_ELEMENTS) * len(LIGAND_ELEMENTS)


@dataclass
class FeatureMatrix:
    ids: list
    values: np.ndarray
    config: FeatureConfig
    column_labels: list = field(default_factory=list)

    def __post_init__(self):
        if not self.column_labels:
            self.column_labels = [f"f_{i:06d}" for i in range(self.values.shape[1])]


def _cloud_grid(cloud: AtomPairCloud, spacing: float, margin_cells: int):
    """Grid anchored to the cloud bounding box plus a fixed cell margin."""
    pos = np.array([a.position for a in cloud.atoms])
    lo = pos.min(axis=0) - margin_cells * spacing
    hi = pos.max(axis=0) + margin_cells * spacing
    dims = tuple(max(2, int(np.ceil((h - l) / spacing)) + 1) for l, h in zip(lo, hi))
    return build_grid(dims, spacing, origin=tuple(lo))


def featurize_pair(cloud: AtomPairCloud, config: FeatureConfig):
    """(k+1) features per isovalue for one pair cloud; zeros when empty.

    The grid is refined (spacing halved, same box) until every connected
    component of the sublevel volume holds at least `min_component_cells`
    grid cells.
    """
    width = config.block_width
    if cloud.empty:
        return np.zeros(width), True
    field_fn = fri_density(cloud.atoms, tau=config.tau)
    out = np.zeros(width)
    for i, isovalue in enumerate(config.isovalues):
        spacing = config.spacing
        for attempt in range(config.max_refinements + 1):
            grid = _cloud_grid(cloud, spacing, config.margin_cells)
            sampled = sample_on_grid(field_fn, grid, isovalue)
            counts = component_cell_counts(sampled)
            if len(counts) == 0 or counts.min() >= config.min_component_cells:
                break
            if attempt == config.max_refinements:
                raise ResolutionLimitError(
                    f"pair {cloud.pair_label} at isovalue {isovalue:g}: component "
                    f"with {int(counts.min())} cells after {attempt} refinements"
                )
            spacing *= 0.5
        ops = OperatorSet(sampled, "normal")
        summ = spectrum(ops.laplacian(3, "big"), config.k, degree=3, bc="normal", kind="big")
        block = np.zeros(config.k + 1)
        block[0] = summ.kernel_dim
        eigs = summ.nonzero_eigenvalues
        block[1 : 1 + len(eigs)] = eigs
        out[i * (config.k + 1) : (i + 1) * (config.k + 1)] = block
    return out, False


def _pair_worker(args):
    cloud, config = args
    values, empty = featurize_pair(cloud, config)
    return values


def featurize_complex(protein: MolecularStructure, ligand: MolecularStructure,
                      config: FeatureConfig) -> np.ndarray:
    """One feature row: 40 pair blocks in fixed lexicographic order."""
    clouds = pair_clouds(protein, ligand, config.cutoff)
    jobs = [(cloud, config) for cloud in clouds]
    if config.threads > 1:
        with ProcessPoolExecutor(max_workers=config.threads) as pool:
            blocks = list(pool.map(_pair_worker, jobs))
    else:
        blocks = [_pair_worker(job) for job in jobs]
    return np.concatenate(blocks)


def column_labels(config: FeatureConfig):
    """Readable labels mirroring the fixed column order."""
    labels = []
    for pe in PROTEIN_ELEMENTS:
        for le in LIGAND_ELEMENTS:
            for ci in range(len(config.isovalues)):
                labels.append(f"{pe}{le}_c{ci}_b0")
                labels.extend(
                    f"{pe}{le}_c{ci}_l{j}" for j in range(1, config.k + 1)
                )
    return labels


def write_features(matrix: FeatureMatrix, destination) -> int:
    """CSV with header 'id,f_000000,...'; full-precision decimal values.

    Returns the byte count written.
    """
    buf = io.StringIO()
    ncol = matrix.values.shape[1] if matrix.values.size else matrix.config.row_width
    buf.write("id," + ",".join(f"f_{i:06d}" for i in range(ncol)) + "\n")
    for cid, row in zip(matrix.ids, matrix.values):
        buf.write(str(cid) + "," + ",".join(repr(float(v)) for v in row) + "\n")
    data = buf.getvalue().encode()
    if hasattr(destination, "write"):
        destination.write(data if "b" in getattr(destination, "mode", "b") else data.decode())
    else:
        with open(destination, "wb") as fh:
            fh.write(data)
    return len(data)


def write_labels(path, ids, labels) -> int:
    with open(path, "w") as fh:
        fh.write("id,label\n")
        for cid, lab in zip(ids, labels):
            fh.write(f"{cid},{lab!r}\n")
    return 0


def run_manifest(config: FeatureConfig, extra=None) -> str:
    """Structured text recording the run configuration and radii table."""
    lines = [
        f"software hodgegrid {__version__}",
        "isovalues " + " ".join(repr(c) for c in config.isovalues),
        f"k {config.k}",
        f"tau {config.tau!r}",
        f"spacing {config.spacing!r}",
        f"cutoff {config.cutoff!r}",
        f"margin_cells {config.margin_cells}",
        f"min_component_cells {config.min_component_cells}",
        f"max_refinements {config.max_refinements}",
        "pair_order " + " ".join(
            f"{pe}-{le}" for pe in PROTEIN_ELEMENTS for le in LIGAND_ELEMENTS
        ),
    ]
    for elem, radius in VDW_RADII.items():
        lines.append(f"vdw {elem} {radius!r}")
    for key, value in (extra or {}).items():
        lines.append(f"{key} {value}")
    return "\n".join(lines) + "\n"
