class QESError(Exception):
    """Base class for errors raised by the qes2x2 package"""


class FieldError(QESError, ArithmeticError):
    """Radicand mismatch or invalid square-root request"""


class VariableMismatchError(QESError, ValueError):
    """Operands carry different variable tags"""


class ModulusMismatchError(QESError, ValueError):
    """Elliptic operands carry different k^2"""


class ParityViolationError(QESError, ValueError):
    """Operator does not map even functions to even functions"""

    def __init__(self, entry, order, odd_part):
        self.entry = entry
        self.order = order
        self.odd_part = odd_part
        super().__init__(
            f"Parity violation in entry {entry}, derivative order {order}: "
            f"odd remainder y*({odd_part})")


class LaurentTailError(QESError, ValueError):
    """Polynomial coefficients were required but negative powers remain"""

    def __init__(self, offending):
        self.offending = offending
        terms = ", ".join(f"{where}: {poly}" for where, poly in offending)
        super().__init__(f"Nonempty Laurent tail: {terms}")


class TrackMismatchError(QESError, TypeError):
    """Operator and space descriptor live on different certification tracks"""


class AmbientOverflowError(QESError, RuntimeError):
    """Image degree exceeded the a-priori ambient bound"""


class ModelError(QESError, ValueError):
    """Invalid model parameters"""


class ConvergenceError(QESError, RuntimeError):
    """An iterative solver did not converge"""


class SampleRejectedError(QESError, ValueError):
    """Sample point too close to a coincidence hyperplane"""


class StepSizeError(QESError, ValueError):
    """Finite-difference step too coarse for the requested accuracy"""


class ConfigError(QESError, ValueError):
    """Invalid or unreadable run configuration"""
