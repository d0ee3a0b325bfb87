"""Exception hierarchy for model construction and checking."""


class IptaError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(IptaError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{line}:{column}: {message}"
        super().__init__(message)


class DuplicateDeclaration(ParseError):
    pass


class UnknownIdentifier(ParseError):
    pass


class UnboundConstant(IptaError):
    pass


class RangeOverflow(IptaError):
    pass


class InvalidDistribution(IptaError):
    pass


class CompositionError(IptaError):
    pass


class ResourceLimit(IptaError):
    """A configured cap (state count, support size) was exceeded."""


class NonConformingChoice(IptaError):
    pass


class NonNormalizedChoice(IptaError):
    pass


class UnsupportedArity(IptaError):
    pass


class QueryError(IptaError):
    pass
