"""gapforge: periodic-geometry design for preassigned spectral gaps, with
desk-scale numerical verification of the homogenization limits."""

from .intervals import (
    GapSpec,
    IntervalSet,
    MatchReport,
    complement_on,
    gap_match_report,
    hausdorff_distance,
    validate_gap_spec,
)
from .design import (
    BubbleGeometry,
    HomogenizedModel,
    design_geometry,
    forward_model,
    solve_weight_system,
    sphere_measure,
    weights_closed_form,
)
from .dispersion import (
    DispersionCurve,
    dispersion_eval,
    f_eval,
    level_set_roots,
    limit_spectrum,
    mu_roots,
    sample_curve,
)
from .cell import (
    EpsGeometry,
    RadialCell,
    TrialFunction,
    angular_integral_F,
    build_radial_cell,
    convergence_table,
    eps_scale,
    junction_flux,
    radial_eigenvalues,
    reference_limits,
    trial_constants,
    trial_rayleigh,
)
from .bands import (
    BandStructure,
    GridSpec,
    PeriodCellGraph,
    band_structure,
    build_cell_graph,
    detect_gaps,
    nd_enclosure,
    theta_spectrum,
)

__version__ = "0.1.0"

__all__ = [
    "GapSpec",
    "IntervalSet",
    "MatchReport",
    "complement_on",
    "gap_match_report",
    "hausdorff_distance",
    "validate_gap_spec",
    "BubbleGeometry",
    "HomogenizedModel",
    "design_geometry",
    "forward_model",
    "solve_weight_system",
    "sphere_measure",
    "weights_closed_form",
    "DispersionCurve",
    "dispersion_eval",
    "f_eval",
    "level_set_roots",
    "limit_spectrum",
    "mu_roots",
    "sample_curve",
    "EpsGeometry",
    "RadialCell",
    "TrialFunction",
    "angular_integral_F",
    "build_radial_cell",
    "convergence_table",
    "eps_scale",
    "junction_flux",
    "radial_eigenvalues",
    "reference_limits",
    "trial_constants",
    "trial_rayleigh",
    "BandStructure",
    "GridSpec",
    "PeriodCellGraph",
    "band_structure",
    "build_cell_graph",
    "detect_gaps",
    "nd_enclosure",
    "theta_spectrum",
    "__version__",
]
