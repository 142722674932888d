"""Exception hierarchy shared by the numerical modules and the CLI."""


class HGComptonError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(HGComptonError, ValueError):
    """An argument lies outside the domain of the operation."""


class KinematicallyForbidden(HGComptonError, ValueError):
    """The requested final state violates energy conservation."""


class DegenerateRoot(HGComptonError, ArithmeticError):
    """The delta-constraint Jacobian vanishes at a root (tangency)."""

    def __init__(self, message, phi_p=None, u=None):
        super().__init__(message)
        self.phi_p = phi_p
        self.u = u


class QuadratureFailure(HGComptonError, ArithmeticError):
    """Adaptive quadrature could not reach the requested tolerance."""


class OracleUnconverged(HGComptonError, ArithmeticError):
    """The regularized brute-force integral did not converge in the width."""


class InsufficientResolution(HGComptonError, ValueError):
    """A sampled spectrum is too coarse to resolve its own minima."""


class ParseError(HGComptonError, ValueError):
    """A configuration document could not be parsed."""

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class ValidationError(HGComptonError, ValueError):
    """A configuration value is missing or out of bounds."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key
