"""Exception hierarchy shared across pipeline stages."""

from __future__ import annotations

from enum import Enum


class ShotSeekError(Exception):
    """Base class for every error raised by this package."""


class MissingField(ShotSeekError):
    def __init__(self, field: str):
        super().__init__(f"sample is missing field {field!r}")
        self.field = field


class InvalidValue(ShotSeekError, ValueError):
    """A value violates a type invariant."""


# -- backend transport ------------------------------------------------------


class BackendError(ShotSeekError):
    pass


class TransportError(BackendError):
    """Retryable failure talking to an external service."""


class MissingFixture(TransportError):
    """Replay store has no entry for the request hash."""

    def __init__(self, kind: str, request_hash: str):
        super().__init__(f"no recorded {kind} response for request {request_hash[:16]}")
        self.kind = kind
        self.request_hash = request_hash


class ModelRefusal(BackendError):
    """The model declined to answer. Not retryable."""


class ContextOverflow(BackendError):
    """Request exceeded the model context; the caller must shrink the input."""


class Unreachable(BackendError):
    def __init__(self, url: str, detail: str = ""):
        super().__init__(f"{url} unreachable{': ' + detail if detail else ''}")
        self.url = url


class Truncated(BackendError):
    def __init__(self, url: str, detail: str = ""):
        super().__init__(f"{url} incomplete{': ' + detail if detail else ''}")
        self.url = url


class MediaToolFailure(BackendError):
    def __init__(self, message: str, stderr: str = ""):
        super().__init__(message if not stderr else f"{message}\n{stderr.strip()[-2000:]}")
        self.stderr = stderr


# -- generator --------------------------------------------------------------


class AgentOutputError(ShotSeekError):
    """The imagination agent's reply could not be turned into queries."""


class NoToolCall(AgentOutputError):
    pass


class MalformedJson(AgentOutputError):
    pass


class WrongToolName(AgentOutputError):
    pass


class ArityMismatch(AgentOutputError):
    def __init__(self, expected: int, got: int):
        super().__init__(f"expected {expected} queries, got {got}")
        self.expected = expected
        self.got = got


# -- retriever --------------------------------------------------------------


class UnparseableUrl(ShotSeekError, ValueError):
    pass


class AllCandidatesFailed(ShotSeekError):
    pass


# -- sampler / localizer ----------------------------------------------------


class IndexOutOfRange(ShotSeekError, IndexError):
    pass


class PartialGrid(MediaToolFailure):
    def __init__(self, got: int, expected: int):
        super().__init__(f"extracted {got} of {expected} frames")
        self.got = got
        self.expected = expected


class ParseErrorKind(str, Enum):
    OUT_OF_RANGE = "OutOfRange"
    NOT_INTEGER = "NotInteger"
    NO_TOOL_CALL = "NoToolCall"
    FORBIDDEN_NA = "ForbiddenNA"


class ParseError(ShotSeekError):
    def __init__(self, kind: ParseErrorKind, detail: str = ""):
        super().__init__(f"{kind.value}{': ' + detail if detail else ''}")
        self.kind = kind


# -- judge / benchkit / harness ---------------------------------------------


class UnparseableVerdict(ShotSeekError):
    pass


class LengthMismatch(ShotSeekError, ValueError):
    pass


class IndivisibleQuota(ShotSeekError):
    pass


class WindowClipped(ShotSeekError):
    pass


class EmptyTask(ShotSeekError):
    pass
