"""Exception types shared across the package."""


class BlockLpError(Exception):
    """Base class for all package errors."""


class IndexOutOfRange(BlockLpError):
    pass


class DimensionMismatch(BlockLpError):
    pass


class NotPositiveDefinite(BlockLpError):
    def __init__(self, message, scale=0.0):
        super().__init__(message)
        self.scale = scale  # magnitude of the matrix diagonal, for retries


class FactorFailed(BlockLpError):
    pass


class TooLarge(BlockLpError):
    pass


class EmptyGraph(BlockLpError):
    pass


class StructureViolation(BlockLpError):
    pass


class SingularGram(BlockLpError):
    pass


class ParseError(BlockLpError):
    def __init__(self, message, line=None):
        if line is not None:
            message = "line %d: %s" % (line, message)
        super().__init__(message)
        self.line = line


class UnsupportedSection(ParseError):
    pass


class InfeasibleBounds(BlockLpError):
    pass


class BadParams(BlockLpError):
    pass
