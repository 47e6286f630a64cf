"""Engine errors carrying stable machine-readable codes.

Every failure that callers are expected to branch on raises TgmError with a
``code`` (stable identifier), a human message and optional ``details``.
The CLI prints ``ERROR <code>: <message>``; the HTTP service wraps the same
triple as ``{"error": {"code", "message", "details"}}``.
"""

from __future__ import annotations

from typing import Any


class TgmError(Exception):
    """Base error; ``code`` is stable across releases, the message is not."""

    def __init__(self, code: str, message: str, **details: Any) -> None:
        super().__init__(message)
        self.code = code
        self.message = message
        self.details = {k: v for k, v in details.items() if v is not None}

    def __str__(self) -> str:
        if self.details:
            extras = ", ".join(f"{k}={v}" for k, v in sorted(self.details.items()))
            return f"{self.message} ({extras})"
        return self.message

    def to_dict(self) -> dict:
        return {"code": self.code, "message": self.message, "details": self.details}


def parse_error(message: str, *, line: int | None = None, column: int | None = None,
                pointer: str | None = None) -> TgmError:
    return TgmError("PARSE_ERROR", message, line=line, column=column, pointer=pointer)
