"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Bad grid/divisor/loop/config parameters (exit code 2 in the CLI)."""


class SolverError(RuntimeError):
    """Newton or CG failed to converge, or a solve left residuals above
    tolerance (exit code 3 in the CLI)."""


class DiagnosticError(RuntimeError):
    """A diagnostic could not be formed (e.g. too few decay-fit samples)."""


class LoopClosureError(RuntimeError):
    """The transported lift did not return to a gauge copy of the start."""


class AccuracyError(RuntimeError):
    """Step-refinement (Richardson) check failed during transport."""


class CheckFailure(RuntimeError):
    """A configured acceptance check failed (exit code 1 in the CLI)."""
