"""Exception and warning types shared across the package.

Two error families matter for callers (and for CLI exit codes): InputError
for bad arguments, configs, or files, and NumericalError for computations
that ran but failed (non-convergence, missing brackets, infeasibility).
"""


class InputError(ValueError):
    """Invalid argument, configuration, or input file."""


class NotSingularError(InputError):
    """The matrix has no singular value at or below the rank threshold."""


class EdgeListError(InputError):
    """Malformed edge-list file; carries the offending line number."""

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class NumericalError(RuntimeError):
    """A numerical procedure failed to produce a usable result."""


class ConvergenceError(NumericalError):
    """An iterative solver ran out of iterations.

    Carries the best iterate and its residual so callers can inspect how
    close the solve got.
    """

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


class BracketError(NumericalError):
    """A sign change required for bisection was not found."""


class GraphGenerationError(NumericalError):
    """Random graph generation exhausted its rejection budget."""


class AssumptionViolationError(NumericalError):
    """A structural assumption (e.g. one-dimensional kernel) does not hold."""


class DegenerateBoundError(NumericalError):
    """The feasibility inequality fails even at vanishing radius."""


class SpectralGapWarning(UserWarning):
    """Smallest retained singular value sits close to the rank threshold."""


class ProjectorMismatchWarning(UserWarning):
    """Range projector and kernel-complement projector disagree (non-normal
    Jacobian); the range-projected value is the one returned."""


class BranchJumpWarning(UserWarning):
    """Equilibrium continuation moved much further than previous steps,
    suggesting a jump to a different branch."""


class SupremumMismatchWarning(UserWarning):
    """Sampled supremum exceeds the closed-form value it specializes."""
