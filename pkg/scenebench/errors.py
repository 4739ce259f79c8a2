"""Error types shared across the workbench.

Every failure a caller can act on derives from :class:`BenchError` and carries a
human readable ``message``.
"""


class BenchError(Exception):
    """Raised when a workbench operation cannot complete."""

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class DuplicateNode(BenchError):
    """Two objects share one node id."""


class DegenerateGeometry(BenchError):
    """A box or pose cannot describe a physical object."""


class UnknownPredicate(BenchError):
    def __init__(self, token: str):
        super().__init__(f"unknown predicate {token!r}")
        self.token = token


class ParseError(BenchError):
    def __init__(self, message: str, *, line: int = 1, column: int = 1):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class SchemaError(BenchError):
    """A document parsed but does not match its schema."""


class DeltaMismatch(BenchError):
    """An edge delta removes a fact the graph does not hold."""


class UnknownNode(BenchError):
    def __init__(self, node_id: str):
        super().__init__(f"unknown node {node_id!r}")
        self.node_id = node_id


class IllegalTransition(BenchError):
    def __init__(self, reason: str):
        super().__init__(f"illegal transition: {reason}")
        self.reason = reason


class NoInstruction(BenchError):
    """A trajectory without instruction text was given to a goal extractor."""


class PolicyTransportError(BenchError):
    """The agent could not be reached or did not answer usefully."""


class AgentTimeout(PolicyTransportError):
    pass


class MalformedReply(PolicyTransportError):
    pass


class AgentUnreachable(PolicyTransportError):
    pass
