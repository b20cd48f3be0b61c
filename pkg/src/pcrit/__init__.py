"""Discrete quasi-linear potential theory on weighted graphs."""

from .certificates import (ads_finite_gap, ads_gap, barta_bounds, harnack_constant, harnack_ratio,
                           picone_gap, pointwise_picone)
from .dirichlet import (DirichletProblem, SolveReport, SolverConfig, certify_coercivity,
                        check_weak_comparison, harmonic_extension, minimize_j, sandwich_solve)
from .eigen import (EigenConfig, EigenReport, check_domain_monotonicity, check_maximum_principle,
                    principal_eigenvalue)
from .exceptions import (CoercivityError, ConvergenceError, GraphValidationError,
                         PcritError, PreconditionError, Refusal)
from .graph import (ExhaustionSpec, SubsetSpec, WeightedGraph, build_family,
                    connected_components, validate, vertex_boundary)
from .limits import extrapolate
from .operators import (OperatorParams, apply_H, apply_L, energy, gateaux_residual,
                        greens_formula_residual, hardy_weight, is_harmonic, is_subharmonic,
                        is_superharmonic, phi_p)
from .potential import (PotentialConfig, capacity, capacity_sequence, classify, green_function,
                        ground_state, lambda_upper_from_capacity, local_green, superharmonic_witness)
from .reports import Certificate

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "ads_finite_gap",
    "ads_gap",
    "apply_H",
    "apply_L",
    "barta_bounds",
    "build_family",
    "capacity",
    "capacity_sequence",
    "Certificate",
    "certify_coercivity",
    "check_domain_monotonicity",
    "check_maximum_principle",
    "check_weak_comparison",
    "classify",
    "CoercivityError",
    "connected_components",
    "ConvergenceError",
    "DirichletProblem",
    "EigenConfig",
    "EigenReport",
    "energy",
    "extrapolate",
    "ExhaustionSpec",
    "gateaux_residual",
    "GraphValidationError",
    "green_function",
    "greens_formula_residual",
    "ground_state",
    "hardy_weight",
    "harmonic_extension",
    "harnack_constant",
    "harnack_ratio",
    "is_harmonic",
    "is_subharmonic",
    "is_superharmonic",
    "lambda_upper_from_capacity",
    "local_green",
    "minimize_j",
    "OperatorParams",
    "PcritError",
    "phi_p",
    "picone_gap",
    "pointwise_picone",
    "PotentialConfig",
    "PreconditionError",
    "principal_eigenvalue",
    "Refusal",
    "sandwich_solve",
    "SolverConfig",
    "SolveReport",
    "SubsetSpec",
    "superharmonic_witness",
    "validate",
    "vertex_boundary",
    "WeightedGraph",
]
