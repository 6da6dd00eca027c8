"""Exception hierarchy shared by every stage of the toolchain."""

from __future__ import annotations


class APPLError(Exception):
    """Base class for all errors raised by applscript."""


class SourceError(APPLError):
    """An error tied to a location in an ``.apl`` source file."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.message = message
        self.line = line
        self.column = column
        if line is not None:
            loc = f"line {line}" + (f", column {column}" if column is not None else "")
            super().__init__(f"{message} ({loc})")
        else:
            super().__init__(message)


class LexError(SourceError):
    pass


class ParseError(SourceError):
    pass


class CompileError(SourceError):
    pass


class DSLRuntimeError(APPLError):
    """A runtime failure inside an APPL-script program.

    ``frames`` holds ``(function name, line)`` pairs, innermost last.
    """

    def __init__(self, message: str, frames: list[tuple[str, int]] | None = None):
        self.message = message
        self.frames = list(frames or [])
        super().__init__(message)

    def format_trace(self) -> str:
        lines = ["Traceback (most recent call last):"]
        for name, line in self.frames:
            lines.append(f"  in {name}, line {line}")
        lines.append(f"RuntimeError: {self.message}")
        return "\n".join(lines)


class PromptifyError(DSLRuntimeError):
    pass


class UnknownTool(DSLRuntimeError):
    pass


class ArgumentDecodeError(DSLRuntimeError):
    pass


class GenerationFailed(APPLError):
    def __init__(self, request_id: int, error: str):
        self.request_id = request_id
        self.error = error
        super().__init__(f"generation gen#{request_id} failed: {error}")


class QueueClosed(APPLError):
    pass


class BackendError(APPLError):
    def __init__(self, message: str, status: int | None = None, body: str = ""):
        self.status = status
        self.body = body
        super().__init__(message)


class ToolCallParseError(APPLError):
    def __init__(self, message: str, raw: str):
        self.raw = raw
        super().__init__(message)


class DocstringParseError(APPLError):
    pass


class ReplayMismatch(APPLError):
    def __init__(self, request_id: int, expected: str, actual: str):
        self.request_id = request_id
        self.expected = expected
        self.actual = actual
        super().__init__(f"replay mismatch at gen#{request_id}: request differs from the recorded one")


class InvalidStages(APPLError):
    pass
