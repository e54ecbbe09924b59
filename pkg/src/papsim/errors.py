"""Exception types shared across the toolkit.

Each carries a short machine-readable ``tag`` so the CLI can emit a stable
one-line error code on stderr and map the class to an exit code.
"""


class PapsimError(Exception):
    tag = "ERROR"
    exit_code = 1


class UnitsError(PapsimError):
    """Dimension mismatch or unknown unit tag."""

    tag = "UNITS"
    exit_code = 2


class DomainError(PapsimError):
    """Input outside an operation's stated domain."""

    tag = "DOMAIN"
    exit_code = 2


class PotentialParseError(PapsimError):
    """Malformed potential file; message carries the line number."""

    tag = "POTENTIAL_PARSE"
    exit_code = 2

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class GridError(PapsimError):
    """Grid extent or resolution insufficient for the requested solve."""

    tag = "GRID"
    exit_code = 2


class ConfigError(PapsimError):
    tag = "CONFIG"
    exit_code = 2


class ConfigNotFoundError(ConfigError):
    tag = "CONFIG_NOT_FOUND"
    exit_code = 2


class ConvergenceError(PapsimError):
    """A numerical procedure failed to converge; message names the culprit."""

    tag = "CONVERGENCE"
    exit_code = 3

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


class CalibrationError(ConvergenceError):
    tag = "CALIBRATION"
    exit_code = 3


class StiffnessError(ConvergenceError):
    tag = "STIFFNESS"
    exit_code = 3


class IntegratorToleranceError(ConvergenceError):
    tag = "INTEGRATOR_TOLERANCE"
    exit_code = 3
