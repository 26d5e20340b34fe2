"""Exception hierarchy shared across the package."""


class NeuroQueryError(Exception):
    """Base class for all errors raised by this package."""


class NonGroundFact(NeuroQueryError):
    """A fact submitted for assertion contains variables."""


class MalformedRow(NeuroQueryError):
    """A CSV row does not conform to the row schema of its file kind."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ParseError(NeuroQueryError):
    """Query text could not be parsed; carries position and expectation."""

    def __init__(self, line: int, column: int, expected: str, found: str = ""):
        detail = f"expected {expected}" + (f", found {found}" if found else "")
        super().__init__(f"{line}:{column}: {detail}")
        self.line = line
        self.column = column
        self.expected = expected
        self.found = found


class TypeErrorStatic(NeuroQueryError):
    """Filter expression literals provably mismatch in kind at parse time."""


class UnboundVariableInFilter(NeuroQueryError):
    def __init__(self, name: str):
        super().__init__(f"filter references unbound variable ?{name}")
        self.name = name


class FilterTypeError(NeuroQueryError):
    """A filter expression applied an operation to values of the wrong kind."""


class InvalidRule(NeuroQueryError):
    """Rule definition rejected (empty body or non-pattern head)."""


class RuleDepthExceeded(NeuroQueryError):
    def __init__(self, depth: int):
        super().__init__(f"rule resolution exceeded maximum depth {depth}")
        self.depth = depth


class VariableAlreadyBound(NeuroQueryError):
    def __init__(self, name: str):
        super().__init__(f"answer variable ?{name} is already bound")
        self.name = name


class DuplicateDocKey(NeuroQueryError):
    """Two documents with the same key were submitted for indexing."""


class UnknownDocKey(NeuroQueryError):
    """A score was requested for a document absent from the index."""


class GatewayUnavailable(NeuroQueryError):
    """The inference backend could not be reached (connection or timeout)."""


class GatewayProtocolError(NeuroQueryError):
    """The inference backend returned a malformed or non-2xx response."""


class TranslationUnparsable(NeuroQueryError):
    """The translator produced text that does not parse; carries the raw text."""

    def __init__(self, raw: str, cause: ParseError):
        super().__init__(f"translated query does not parse ({cause}); raw text: {raw!r}")
        self.raw = raw
        self.cause = cause


class MissingRun(NeuroQueryError):
    def __init__(self, qid: str):
        super().__init__(f"no retrieval run recorded for example {qid}")
        self.qid = qid


class LengthMismatch(NeuroQueryError):
    """Candidate and reference corpora differ in length."""


class ConfigError(NeuroQueryError):
    """Engine configuration is invalid or contains unknown keys."""
