"""Exception types raised across the package."""


class QGanError(Exception):
    pass


class ResourceError(QGanError, ValueError):
    """Requested size exceeds what the dense simulator is allowed to allocate."""


class InvalidGateError(QGanError, ValueError):
    pass


class NumericalDegeneracyError(QGanError, ArithmeticError):
    pass


class LayoutError(QGanError, ValueError):
    """Parameter vector length does not match the circuit layout."""


class ShapeError(QGanError, ValueError):
    pass


class ConfigError(QGanError, ValueError):
    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
