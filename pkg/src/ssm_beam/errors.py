"""Exception types shared across the toolkit."""


class ConfigError(ValueError):
    """Invalid parameters or configuration."""


class ResonanceError(ArithmeticError):
    """A denominator of a homological or linear-response solve is (near) zero."""

    def __init__(self, message, combination=None):
        super().__init__(message)
        self.combination = combination


class SingularBasisError(ArithmeticError):
    """Basis change is singular (overdamped or defective mode)."""


class IntegrationError(RuntimeError):
    """Time integration or a fixed-point iteration failed."""
