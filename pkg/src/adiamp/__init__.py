"""Adiabatic amplification in non-Hermitian systems.

Biorthogonal eigensystems, Petermann factors, geometric amplification
factors and Berry curvatures of parameterized non-Hermitian Hamiltonians,
endpoint formulas for symmetric families, and direct RK4 integration of the
time-dependent Schrödinger equation to cross-check them.
"""
from .errors import *  # noqa: F401,F403
from .spectral import (
    EigenPair,
    EigenSystem,
    TrackedBand,
    eig_full,
    follow,
    largest_real,
    nearest,
    pair_left_right,
    smallest_real,
    track_band,
)
from .family import HamiltonianFamily, Path, constant_family, rectangle
from .geometry import (
    CURL_PLANES,
    CurvatureMap,
    CurvatureSample,
    GeometrySample,
    amplification_line_integral,
    berry_phase_links,
    berry_curvature,
    curvature_map,
    curvature_plaquette,
    curvature_vector,
    geometric_integrand,
    log_amplification,
    petermann,
    xi_term,
)
from .classes import (
    CLASS_TAGS,
    MatrixFlags,
    SimilarityResult,
    SymmetryRelation,
    classify_matrix,
    closed_form_Ag,
    similarity_check,
    verify_relation,
)
from .dynamics import (
    AdiabaticityReport,
    Schedule,
    SimulationConfig,
    SimulationResult,
    adiabaticity_report,
    amplification,
    convergence_ratio,
    forward_reverse,
    geometric_via_reverse,
    integrate,
    step_halving,
)

__version__ = "0.1.0"
