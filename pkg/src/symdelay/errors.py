"""Exception hierarchy shared by all subpackages."""


class SymDelayError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(SymDelayError, ValueError):
    """A precondition on user input was violated."""


class NumericalError(SymDelayError, RuntimeError):
    """A numerical procedure failed to reach its declared accuracy."""


class QuadratureError(NumericalError):
    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class NonScatteringError(NumericalError):
    pass


class IntegratorError(NumericalError):
    pass


class CrossingError(NumericalError):
    pass


class WraparoundError(NumericalError):
    pass


class SojournTailError(NumericalError):
    pass


class NotConvergedError(NumericalError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class UnitarityError(NumericalError):
    pass


class AssumptionIError(ValidationError):
    def __init__(self, message, worst_defect=None):
        super().__init__(message)
        self.worst_defect = worst_defect
