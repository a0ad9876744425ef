"""Exception hierarchy shared by all modules."""


class GCenterError(Exception):
    """Base class for every error raised by the package."""


class InvalidModelError(GCenterError, ValueError):
    pass


class IncompatibleBasisError(GCenterError, ValueError):
    pass


class InvalidGridError(GCenterError, ValueError):
    pass


class NumericalFailureError(GCenterError, RuntimeError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class CalibrationError(GCenterError, RuntimeError):
    pass


class InvalidOrientationError(GCenterError, ValueError):
    pass


class EmptyDiagramError(GCenterError, ValueError):
    pass


class OutOfRangeError(GCenterError, ValueError):
    pass


class NonlinearRegimeError(GCenterError, ValueError):
    pass


class FitFailureError(GCenterError, RuntimeError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class EmptyStreamError(GCenterError, ValueError):
    pass


class SchemaError(GCenterError, ValueError):
    """Malformed measurement file; carries the offending row/column when known."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class InsufficientSamplesError(GCenterError, ValueError):
    pass
