"""
The exceptions raised across the package. Every one of them derives from FigOpError so that
the command line can tell our own failures apart from genuine crashes.
"""


class FigOpError(Exception):
    pass


class ParameterError(FigOpError, ValueError):
    """Invalid numeric parameters (shaping parameters, time limits, dimensions)."""


class ContractError(FigOpError, ValueError):
    """A caller broke a precondition, e.g. a path that does not start at the root."""


class DomainError(FigOpError, ValueError):
    """A query was made on a cell or node that cannot take part in it."""


class SizeError(FigOpError, ValueError):
    pass


class ScenarioError(FigOpError, ValueError):
    pass


class InstanceParseError(FigOpError, ValueError):

    def __init__(self, message: str, line: int, column: int = 1):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")
