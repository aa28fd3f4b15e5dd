#!/usr/bin/env python3
from typing import Optional


class MultipathError(Exception):
    """Raíz de todos los errores de la librería."""


class InvalidArgumentError(MultipathError, ValueError):
    pass


class DegenerateConditionalError(MultipathError):
    """Todos los pesos candidatos de un sitio son cero."""

    def __init__(self, message: str, path: Optional[int] = None, site: Optional[int] = None):
        super().__init__(message)
        self.path = path
        self.site = site


class ConsistencyError(MultipathError):
    """Los contadores no coinciden con los caminos."""


class CorpusFormatError(InvalidArgumentError):
    def __init__(
        self,
        message: str,
        line: Optional[int] = None,
        doc_id: Optional[int] = None,
        token_index: Optional[int] = None,
    ):
        parts = [message]
        if line is not None:
            parts.append(f"line {line}")
        if doc_id is not None:
            parts.append(f"document {doc_id}")
        if token_index is not None:
            parts.append(f"token index {token_index}")
        super().__init__(" | ".join(parts))
        self.line = line
        self.doc_id = doc_id
        self.token_index = token_index


class ConfigError(InvalidArgumentError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class RepetitionError(MultipathError):
    def __init__(self, repetition: int, cause: BaseException):
        super().__init__(f"repetition {repetition} failed: {cause}")
        self.repetition = repetition
        self.cause = cause
