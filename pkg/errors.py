class AdToolError(Exception):
    """Base class for every error raised by adtool."""


class ConfigError(AdToolError):
    pass


class GraphError(AdToolError):
    """Invalid graph construction (bad identifier, non-finite constant, foreign node)."""


class ParseError(AdToolError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class RequestError(AdToolError):
    """Malformed or unsatisfiable derivative request."""


class InputError(AdToolError):
    """Missing or unknown input variables and seeds."""


class DomainError(AdToolError):
    def __init__(self, message: str, node: str | None = None):
        self.node = node
        super().__init__(message)


class StorageError(AdToolError):
    pass


class ElidedValueError(StorageError):
    """The value was elided by storage analysis and never kept on the tape."""


class PlanError(AdToolError):
    pass
