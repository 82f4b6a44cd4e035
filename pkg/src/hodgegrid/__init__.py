"""Discrete exterior calculus on Cartesian grids.

Hodge and Boundary-Induced Graph (BIG) Laplacian spectra of level-set
sublevel volumes, their persistence across a filtration, and topological
feature vectors for molecular structures.
"""

__version__ = "0.1.0"

from .errors import (
    DataError,
    EmptyStructureError,
    HodgeGridError,
    InvalidArgumentError,
    InvalidStateError,
    ParseError,
    ResolutionLimitError,
    SolverError,
)
from .grid import GridComplex, boundary_matrix, build_grid
from .laplacian import OperatorSet, export_coordinate_text, restricted_differential
from .levelset import (
    AtomSite,
    SampledField,
    ScalarField,
    analytic_sdf,
    ball_union_sdf,
    four_ball_sdf,
    fri_density,
    read_tabulated_field,
    sample_on_grid,
    shell_sdf,
    sphere_sdf,
    torus_sdf,
    write_tabulated_field,
)
from .spectra import (
    SpectrumSummary,
    TCNSplit,
    betti_numbers,
    dense_oracle,
    laplacian_spectrum,
    leading_tcn,
    spectrum,
    tcn_split,
    vertex_component_count,
)
from .supports import Support, compute_support, projection_matrix
from .stars import HodgeStar, fractional_volume, hodge_star
