"""Exception types shared across the package."""


class ShapeError(ValueError):
    """An operand has the wrong rank, extent or channel count."""


class SpectralResidueError(ArithmeticError):
    """An inverse transform left a non-negligible imaginary component."""


class MissingWeightError(KeyError):
    """A named parameter is absent from a weights mapping."""

    def __init__(self, name):
        super().__init__(name)
        self.name = name

    def __str__(self):
        return f"missing weight entry {self.name!r}"


class GraphError(ValueError):
    """A feature graph is malformed (cycle, unknown id, shape conflict)."""

    def __init__(self, message, node=None, axis=None):
        super().__init__(message)
        self.node = node
        self.axis = axis


class FormatError(ValueError):
    """Base class for file codec failures."""


class BadMagicError(FormatError):
    pass


class BadVersionError(FormatError):
    pass


class TruncatedError(FormatError):
    pass


class NameEncodingError(FormatError):
    pass
