"""Modulated pre-/post-selected measurement toolkit.

Simulates a two-level system coupled to a Gaussian pointer with
pre-/post-selection, an added coupling modulation, and the resulting
metrology: readout distributions, mean-shift response, Fisher
information (joint, post-selected, classical), likelihood estimation,
and an adaptive three-stage protocol for arbitrary coupling strengths.
"""

from .core import (
    CouplingConfig,
    GaussianPointer,
    PointerDistribution,
    PointerGrid,
    PPSMSetup,
    QubitState,
    branch_interference,
    default_quadrature_spec,
    linearized_shift,
    optimal_post,
    optimal_pre,
    optimal_setup,
    pointer_pdf,
    pointer_shift,
    post_selected_amplitude,
    post_selection_probability,
    post_selection_probability_derivative,
    post_selection_probability_quadrature,
    readout_density,
    weak_value,
    wrap_angle,
)
from .curves import CurveTable, read_curve_csv, run_curve, write_curve_csv
from .errors import (
    BoundaryMaximum,
    DegeneratePointer,
    EmptyRegion,
    FlatFunction,
    HierarchyViolation,
    NoConvergence,
    OrthogonalSelection,
    ParseError,
    PPSMError,
    RegimeViolation,
    RegionMiss,
    ValidationError,
    ZeroDensity,
    ZeroPostSelection,
)
from .estimation import (
    AdaptiveTrace,
    EstimationReport,
    HiddenCouplingSampler,
    MeasurementRecord,
    ReplicationSummary,
    adaptive_protocol,
    log_likelihood,
    mle,
    replicate_mle,
    sample_record,
)
from .fisher import (
    FisherReport,
    RegionBounds,
    cfi,
    fisher_report,
    optimal_modulation,
    qfi_joint,
    qfi_joint_max,
    qfi_joint_quadrature,
    qfi_postselected,
    region_bounds,
    sensitivity,
)
from .numerics import QuadratureSpec, RngStream, integrate
from .scenario import PRESETS, Scenario, parse_scenario, resolve_g_mod

__version__ = "0.1.0"

__all__ = [
    "AdaptiveTrace",
    "BoundaryMaximum",
    "CouplingConfig",
    "CurveTable",
    "DegeneratePointer",
    "EmptyRegion",
    "EstimationReport",
    "FisherReport",
    "FlatFunction",
    "GaussianPointer",
    "HiddenCouplingSampler",
    "HierarchyViolation",
    "MeasurementRecord",
    "NoConvergence",
    "OrthogonalSelection",
    "PPSMError",
    "PPSMSetup",
    "ParseError",
    "PointerDistribution",
    "PointerGrid",
    "PRESETS",
    "QuadratureSpec",
    "QubitState",
    "RegimeViolation",
    "RegionBounds",
    "RegionMiss",
    "ReplicationSummary",
    "RngStream",
    "Scenario",
    "ValidationError",
    "ZeroDensity",
    "ZeroPostSelection",
    "adaptive_protocol",
    "branch_interference",
    "cfi",
    "default_quadrature_spec",
    "fisher_report",
    "integrate",
    "linearized_shift",
    "log_likelihood",
    "mle",
    "optimal_modulation",
    "optimal_post",
    "optimal_pre",
    "optimal_setup",
    "parse_scenario",
    "pointer_pdf",
    "pointer_shift",
    "post_selected_amplitude",
    "post_selection_probability",
    "post_selection_probability_derivative",
    "post_selection_probability_quadrature",
    "qfi_joint",
    "qfi_joint_max",
    "qfi_joint_quadrature",
    "qfi_postselected",
    "read_curve_csv",
    "readout_density",
    "region_bounds",
    "replicate_mle",
    "resolve_g_mod",
    "run_curve",
    "sample_record",
    "sensitivity",
    "weak_value",
    "wrap_angle",
    "write_curve_csv",
]
