"""Linked-loop commutators of intrinsic vector potentials in Minkowski space.

Submodules
----------
geometry
    Four-vectors, parametrized loops and surfaces, causal predicates.
linking
    Gauss-integral, crossing-sign and causal linking numbers.
smearing
    Mollifiers, loop and surface test functions, Fourier transforms.
spectral
    Spectral models of field pairs and mass-shell quadrature.
commutator
    Smeared commutators, two-point functions and the loop experiments.
cli
    Scene-file front end (``qftlink`` console script).
"""

from .commutator import (
    CommutatorReport,
    check_wightman_positivity,
    dalembert_curl_identity_check,
    extract_Z,
    intrinsic_commutator,
    mass_gap_sweep,
    normalization_scaling_check,
    smeared_field_commutator,
    two_point_function,
    verify_linking_proportionality,
)
from .exceptions import QftLinkError
from .geometry import (
    FourVector,
    cone_surface,
    make_circle,
    make_hopf_pair,
    make_polyline,
    make_torus_link_pair,
)
from .linking import causal_linking_number, crossing_sign_linking, gauss_linking
from .smearing import LoopSmearing, SurfaceSmearing, bump, gaussian
from .spectral import FieldPairModel, ShellGrid, TensorStructure

__version__ = "0.1.0"

__all__ = [
    "CommutatorReport", "FieldPairModel", "FourVector", "LoopSmearing", "QftLinkError",
    "ShellGrid", "SurfaceSmearing", "TensorStructure", "bump", "causal_linking_number",
    "check_wightman_positivity", "cone_surface", "crossing_sign_linking",
    "dalembert_curl_identity_check", "extract_Z", "gauss_linking", "gaussian",
    "intrinsic_commutator", "make_circle", "make_hopf_pair", "make_polyline",
    "make_torus_link_pair", "mass_gap_sweep", "normalization_scaling_check",
    "smeared_field_commutator", "two_point_function", "verify_linking_proportionality",
]
