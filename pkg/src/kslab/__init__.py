"""Radial self-similar solutions of the minimal Keller-Segel system.

The package evolves the radial mass distribution, builds self-similar
profiles by shooting, evaluates explicit linear barriers and the
nonexistence threshold, and checks the resulting identities.
"""
from __future__ import annotations

from ._backend import backend_name
from .barrier import BarrierSpec, barrier_field, barrier_value, g_bound, g_diagnostic
from .blowup import ThresholdResult, classify, compute_threshold
from .masspde import (BlowUpSignal, NumericalFailure, SolveReport, SolverConfig, evolve, solve,
                      solve_many, verify_comparison, verify_scaling)
from .model import (CriticalWarning, MassField, ModelParams, RadialGrid, TruncationSpec,
                    chandrasekhar_field, truncated_field)
from .poisson import DensityField, potential_gradient, radial_equation_residual
from .profile import (IntegratingFactor, SelfSimilarProfile, ShootingError, extract_profile,
                      integrating_factor, match_profile, profile_limits, shoot_profile)
from .specfun import QuadratureError, QuadratureSpec

__version__ = "0.1.0"

__all__ = [
    "BarrierSpec", "BlowUpSignal", "CriticalWarning", "DensityField", "IntegratingFactor",
    "MassField", "ModelParams", "NumericalFailure", "QuadratureError", "QuadratureSpec",
    "RadialGrid", "SelfSimilarProfile", "ShootingError", "SolveReport", "SolverConfig",
    "ThresholdResult", "TruncationSpec", "backend_name", "barrier_field", "barrier_value",
    "chandrasekhar_field", "classify", "compute_threshold", "evolve", "extract_profile",
    "g_bound", "g_diagnostic", "integrating_factor", "match_profile", "potential_gradient",
    "profile_limits", "radial_equation_residual", "shoot_profile", "solve", "solve_many",
    "truncated_field", "verify_comparison", "verify_scaling",
]
