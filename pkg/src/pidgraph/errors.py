"""Exception taxonomy shared across the package."""


class PidGraphError(Exception):
    """Base class for all package errors."""


class ConflictError(PidGraphError):
    """An id or resource already exists."""


class NotFoundError(PidGraphError):
    """A node, edge, graph, or session does not exist."""


class ValidationError(PidGraphError):
    """A value violates a structural invariant."""


class GraphMlParseError(PidGraphError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class GraphMlSchemaError(PidGraphError):
    """GraphML references an undeclared key or an unsupported type."""


class InvalidTransitionError(PidGraphError):
    """Condensation requested to a level at or below the current one."""


class EnrichmentError(PidGraphError):
    def __init__(self, node_id: str, message: str):
        self.node_id = node_id
        super().__init__(f"enrichment failed for node {node_id!r}: {message}")


class QuerySyntaxError(PidGraphError):
    def __init__(self, message: str, line: int, column: int, expected: tuple[str, ...] = ()):
        self.line = line
        self.column = column
        self.expected = expected
        detail = f"{message} at line {line}, column {column}"
        if expected:
            detail += " (expected " + " or ".join(expected) + ")"
        super().__init__(detail)


class QuerySemanticError(PidGraphError):
    """Query is grammatical but unsound, e.g. an unbound variable."""


class HopCeilingError(PidGraphError):
    """Variable-length pattern exceeds the configured hop ceiling."""


class ToolError(PidGraphError):
    """A retrieval tool failed; message carries the cause."""


class GatewayError(PidGraphError):
    """Base class for LLM gateway failures."""


class AuthError(GatewayError):
    pass


class RateLimitError(GatewayError):
    def __init__(self, message: str, retry_after: float | None = None):
        self.retry_after = retry_after
        super().__init__(message)


class TransportError(GatewayError):
    pass


class ProviderError(GatewayError):
    pass


class ConfigurationError(PidGraphError):
    """Missing or inconsistent configuration (model, price, index, path)."""


class ScoringError(PidGraphError):
    """Evaluation scoring failed (judge output unusable, embedder failure)."""
