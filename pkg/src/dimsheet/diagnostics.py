"""Diagnostics shared by the parser and the analyzer."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    column: int = 1

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    code: str
    message: str
    span: SourceSpan | None = None

    @classmethod
    def error(cls, code: str, message: str, span: SourceSpan | None = None) -> "Diagnostic":
        return cls(Severity.ERROR, code, message, span)

    @classmethod
    def warning(cls, code: str, message: str, span: SourceSpan | None = None) -> "Diagnostic":
        return cls(Severity.WARNING, code, message, span)

    @property
    def is_error(self) -> bool:
        return self.severity is Severity.ERROR

    def __str__(self) -> str:
        where = f"{self.span}: " if self.span else ""
        return f"{where}{self.severity.value}[{self.code}]: {self.message}"

    def to_json(self) -> dict:
        out = {"severity": self.severity.value, "code": self.code, "message": self.message}
        if self.span is not None:
            out["span"] = {"file": self.span.file, "line": self.span.line, "column": self.span.column}
        return out


class ModelError(Exception):
    """Raised when a model cannot be built; carries every diagnostic found."""

    def __init__(self, diagnostics: list[Diagnostic] | Diagnostic):
        if isinstance(diagnostics, Diagnostic):
            diagnostics = [diagnostics]
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))

    @property
    def errors(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.is_error]
