"""Exception hierarchy shared by the solvers and the command-line front end."""


class PcritError(Exception):
    """Base class for all package errors."""


class GraphValidationError(PcritError, ValueError):
    """Graph data violates the weighted-graph axioms.

    The full violation list is kept in ``violations``.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        kinds = sorted({v["kind"] for v in self.violations})
        super().__init__(f"{len(self.violations)} graph violation(s): {', '.join(kinds)}")


class PreconditionError(PcritError, ValueError):
    """An input violates a documented precondition (positivity, support, ...)."""


class CoercivityError(PcritError):
    """The energy could not be certified coercive on the admissible class."""

    def __init__(self, message, lambda0=None, witness=None):
        super().__init__(message)
        self.lambda0 = lambda0
        self.witness = witness


class ConvergenceError(PcritError):
    """An iterative solver exhausted its budget without meeting its tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class Refusal(PcritError):
    """A verdict-level refusal, e.g. asking for a Green's function on critical evidence."""

    def __init__(self, message, evidence=None):
        super().__init__(message)
        self.evidence = evidence
