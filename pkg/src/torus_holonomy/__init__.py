"""Controlled integrable dynamics on the m-torus: simulation and verification.

The package builds everything on a truncated Fourier mode box: classical
free and perturbed flows in action-angle coordinates, path-ordered
transport of mode values and actions, operator quantization of affine
observables, and the factorized propagators of the parameter-driven
system, whose control part depends on the traced path only and acts as a
holonomy on the degenerate eigenspaces of the dynamic Hamiltonian.
"""

import os as _os

# Desk-scale workloads: thousands of exponentials of matrices no larger than
# a few hundred rows.  BLAS thread pools lose badly there, so pin them before
# the first numpy import unless the user already chose a setting.
for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    _os.environ.setdefault(_var, "1")
del _os, _var

from .classical import (
    ModeTransport,
    Trajectory,
    classical_action_transport,
    classical_mode_transport,
    evolve_free,
    evolve_perturbed,
    split_residual,
)
from .curves import (
    CirclePath,
    ParameterCurve,
    WaypointPath,
    concatenate,
    line_integral,
    reparameterize,
    step_intervals,
)
from .errors import (
    BandwidthError,
    ConfigError,
    DimensionMismatchError,
    OpenCurveError,
    SplitViolationError,
    TorusHolonomyError,
)
from .fields import (
    ActionPolynomial,
    AffineObservable,
    ControlConnection,
    ParameterPolynomial,
    TorusFourierField,
    connection_as_observable,
    poisson_bracket,
)
from .lattice import (
    ClassicalState,
    ModeIndex,
    TorusModel,
    WaveFunction,
    canonical_offsets,
    inner_product,
    interior_modes,
    mode_iter,
    wrap_angles,
)
from .operators import (
    OperatorMatrix,
    SpectralComparison,
    action_operator,
    dirac_residual,
    halfform_equivalence,
    hamiltonian_operator,
    lambda_shift_equivalence,
    multiplication_operator,
    quantize_affine,
)
from .propagation import (
    FactorizationReport,
    PropagatorReport,
    delta_generator,
    dynamic_propagator,
    evolve_control,
    evolve_dynamic,
    evolve_full,
    holonomy,
    path_invariance_report,
    restrict_to_eigenspace,
)

__version__ = "0.1.0"

__all__ = [
    "ActionPolynomial",
    "AffineObservable",
    "BandwidthError",
    "CirclePath",
    "ClassicalState",
    "ConfigError",
    "ControlConnection",
    "DimensionMismatchError",
    "FactorizationReport",
    "ModeIndex",
    "ModeTransport",
    "OpenCurveError",
    "OperatorMatrix",
    "ParameterCurve",
    "ParameterPolynomial",
    "PropagatorReport",
    "SpectralComparison",
    "SplitViolationError",
    "TorusFourierField",
    "TorusHolonomyError",
    "TorusModel",
    "Trajectory",
    "WaveFunction",
    "WaypointPath",
    "action_operator",
    "canonical_offsets",
    "classical_action_transport",
    "classical_mode_transport",
    "concatenate",
    "connection_as_observable",
    "delta_generator",
    "dirac_residual",
    "dynamic_propagator",
    "evolve_control",
    "evolve_dynamic",
    "evolve_free",
    "evolve_full",
    "evolve_perturbed",
    "halfform_equivalence",
    "hamiltonian_operator",
    "holonomy",
    "inner_product",
    "interior_modes",
    "lambda_shift_equivalence",
    "line_integral",
    "mode_iter",
    "multiplication_operator",
    "path_invariance_report",
    "poisson_bracket",
    "quantize_affine",
    "reparameterize",
    "restrict_to_eigenspace",
    "split_residual",
    "step_intervals",
    "wrap_angles",
]
