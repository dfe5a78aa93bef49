"""Band structure and inverse gap design for periodic metric graphs.

The package models one period cell of a Z^n-periodic metric graph whose
edges carry a stiffness-scaled one dimensional Laplacian and whose marked
vertices carry two-sided flux couplings of given strengths.  It computes
fiber spectra exactly from a secular determinant, certifies spectral gaps
from the free/clamped bracketing of every fiber eigenvalue, evaluates the
small-stiffness limit operator in closed form, and inverts it: given
desired gap intervals it produces edge lengths and coupling strengths
whose realized graph exhibits those gaps.
"""

from .errors import (
    AssemblyError,
    BandgapError,
    CeilingError,
    CellStructureError,
    DegenerateConstantsError,
    DesignConditioningError,
    FormatError,
    GridResolutionError,
    PoleError,
    TargetOrderError,
)
from .graph_model import (
    ROLE_EXTERNAL,
    ROLE_INTERIOR,
    ROLE_INTERNAL,
    BoundaryPairing,
    CouplingSet,
    Edge,
    PartTotals,
    PeriodCell,
    ValidationReport,
    Vertex,
    Violation,
    build_comb,
    cell_from_dict,
    cell_to_dict,
    dumps_cell,
    load_cell,
    loads_cell,
    part_totals,
    save_cell,
    subdivide_edge,
    validate_cell,
)
from .limit_theory import (
    LimitModel,
    det_identity_residual,
    dirichlet_limits,
    eval_characteristic,
    gap_right_endpoints,
    limit_constants,
    limit_matrix,
    limit_matrix_spectrum,
    limit_model_for_cell,
)
from .fiber_solver import (
    DIRICHLET,
    NEUMANN,
    SpectralProblem,
    Spectrum,
    Theta,
    assemble_secular,
    count_eigenvalues_interval,
    eigenvalues_below,
    fem_oracle,
    sigma_min,
    singular_values,
)
from .band_structure import (
    Band,
    BandDiagram,
    CertifiedGap,
    ConvergenceRow,
    ConvergenceTable,
    FiberSample,
    band_intervals,
    certify_gaps,
    convergence_csv,
    convergence_study,
    gaps_csv,
    sweep_csv,
    sweep_fiber_spectra,
    theta_angle_grid,
)
from .gap_designer import (
    GapDesign,
    GapTargets,
    design,
    design_to_dict,
    limit_of_design,
    load_targets,
    loads_targets,
    realize,
    targets_from_dict,
    targets_to_dict,
    verify_system,
)

__version__ = "0.1.0"

__all__ = [
    "AssemblyError",
    "Band",
    "BandDiagram",
    "BandgapError",
    "BoundaryPairing",
    "CeilingError",
    "CellStructureError",
    "CertifiedGap",
    "ConvergenceRow",
    "ConvergenceTable",
    "CouplingSet",
    "DIRICHLET",
    "DegenerateConstantsError",
    "DesignConditioningError",
    "Edge",
    "FiberSample",
    "FormatError",
    "GapDesign",
    "GapTargets",
    "GridResolutionError",
    "LimitModel",
    "NEUMANN",
    "PartTotals",
    "PeriodCell",
    "PoleError",
    "ROLE_EXTERNAL",
    "ROLE_INTERIOR",
    "ROLE_INTERNAL",
    "SpectralProblem",
    "Spectrum",
    "TargetOrderError",
    "Theta",
    "ValidationReport",
    "Vertex",
    "Violation",
    "assemble_secular",
    "band_intervals",
    "build_comb",
    "cell_from_dict",
    "cell_to_dict",
    "certify_gaps",
    "convergence_csv",
    "convergence_study",
    "count_eigenvalues_interval",
    "design",
    "design_to_dict",
    "det_identity_residual",
    "dirichlet_limits",
    "dumps_cell",
    "eigenvalues_below",
    "eval_characteristic",
    "fem_oracle",
    "gap_right_endpoints",
    "gaps_csv",
    "limit_constants",
    "limit_matrix",
    "limit_matrix_spectrum",
    "limit_model_for_cell",
    "limit_of_design",
    "load_cell",
    "load_targets",
    "loads_cell",
    "loads_targets",
    "part_totals",
    "realize",
    "save_cell",
    "sigma_min",
    "singular_values",
    "subdivide_edge",
    "sweep_csv",
    "sweep_fiber_spectra",
    "targets_from_dict",
    "targets_to_dict",
    "theta_angle_grid",
    "validate_cell",
    "verify_system",
]
