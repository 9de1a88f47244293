"""Slow spectral submanifolds of a damped, forced Rayleigh beam with a cubic restoring force."""

from .errors import ConfigError, IntegrationError, ResonanceError, SingularBasisError
from .model import BeamParameters, ForcingSpec, check_assumptions, eigenvalues, spectral_quotient
from .ssm_unforced import build_ssm, evaluate_parametrization, invariance_residual
from .forced_ssm import first_order_coefficients, linear_periodic_response
from .galerkin import GalerkinConfig, GalerkinState, integrate, poincare_fixed_point, validate_ssm

__version__ = "0.1.0"

__all__ = [
    "BeamParameters",
    "ForcingSpec",
    "ConfigError",
    "IntegrationError",
    "ResonanceError",
    "SingularBasisError",
    "GalerkinConfig",
    "GalerkinState",
    "build_ssm",
    "check_assumptions",
    "eigenvalues",
    "evaluate_parametrization",
    "first_order_coefficients",
    "integrate",
    "invariance_residual",
    "linear_periodic_response",
    "poincare_fixed_point",
    "spectral_quotient",
    "validate_ssm",
]
