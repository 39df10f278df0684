"""Exception types raised across nestfuse."""


class NestFuseError(Exception):
    """Base class for all nestfuse errors."""


class ParseError(NestFuseError, ValueError):
    """A malformed line in an input file."""

    def __init__(self, message, path=None, line_no=None):
        self.path = path
        self.line_no = line_no
        where = ""
        if path is not None:
            where = f"{path}"
        if line_no is not None:
            where = f"{where}:{line_no}" if where else f"line {line_no}"
        super().__init__(f"{where}: {message}" if where else message)


class ValidationError(NestFuseError, ValueError):
    """Parsed input violates a structural invariant (duplicates, bounds)."""


class ContractError(NestFuseError, ValueError):
    """A function was called outside its documented domain."""


class ConfigError(NestFuseError, ValueError):
    """Invalid user configuration (method name, tunable out of range)."""


class EvaluationError(NestFuseError):
    """Evaluation could not be carried out (e.g. no shared queries)."""


class SkipQuery(NestFuseError):
    """Signal that a query cannot be fused and should be left out."""

    def __init__(self, query_id, reason):
        self.query_id = query_id
        self.reason = reason
        super().__init__(f"query {query_id}: {reason}")
