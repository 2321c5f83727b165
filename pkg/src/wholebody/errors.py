"""Exception hierarchy.

Every error carries a short machine-readable ``category`` string that the
command line reports on failure.
"""


class WholeBodyError(Exception):
    category = "error"
    exit_code = 1


class DimensionMismatch(WholeBodyError, ValueError):
    category = "dimension_mismatch"
    exit_code = 3


class NotARotation(WholeBodyError, ValueError):
    category = "not_a_rotation"
    exit_code = 3


class BadIndex(WholeBodyError, IndexError):
    category = "bad_index"
    exit_code = 3


class MissingPart(WholeBodyError, KeyError):
    category = "missing_part"
    exit_code = 3

    def __str__(self):
        return Exception.__str__(self)


class TooShort(WholeBodyError, ValueError):
    category = "too_short"
    exit_code = 3


class NoEvidence(WholeBodyError, ValueError):
    category = "no_evidence"
    exit_code = 4


class NonFinite(WholeBodyError, FloatingPointError):
    category = "non_finite"
    exit_code = 4


class DegenerateArm(WholeBodyError, ValueError):
    category = "degenerate_arm"
    exit_code = 4


class Degenerate(WholeBodyError, ValueError):
    category = "degenerate"
    exit_code = 4


class SolverFailed(WholeBodyError, RuntimeError):
    category = "solver_failed"
    exit_code = 4


class ModelFormatError(WholeBodyError, ValueError):
    """Invalid model or estimate file. ``location`` points at the offending field."""

    category = "format_error"
    exit_code = 2

    def __init__(self, message, location=None):
        self.location = location
        if location:
            message = f"{location}: {message}"
        super().__init__(message)
