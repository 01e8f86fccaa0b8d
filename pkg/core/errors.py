#!/usr/bin/env python3
"""
Error hierarchy shared by the numerical core, the repositories and the CLI

Validation-type failures derive from ValueError/OSError (CLI exit code 1),
numeric failures derive from ArithmeticError (CLI exit code 2).
"""
from typing import Optional


class DecompError(Exception):
    """Base class for every error raised by this package"""


class ConfigError(DecompError, ValueError):
    """Invalid specification, configuration or argument"""


class ShapeError(DecompError, ValueError):
    """Operand shapes do not conform for a tensor op"""

    def __init__(self, kind: str, shapes, detail: str = ""):
        self.kind = kind
        self.shapes = tuple(tuple(s) for s in shapes)
        message = f"shape mismatch in '{kind}' for operand shapes {list(self.shapes)}"
        if detail:
            message += f": {detail}"
        super().__init__(message)


class FormatError(DecompError, ValueError):
    """Malformed binary or text input; `field` names the first violated field"""

    def __init__(self, field: str, message: str, path: Optional[str] = None):
        self.field = field
        self.path = path
        prefix = f"{path}: " if path else ""
        super().__init__(f"{prefix}[{field}] {message}")


class StorageError(DecompError, OSError):
    """I/O failure with the offending path attached"""

    def __init__(self, path: str, message: str):
        self.path = str(path)
        super().__init__(f"{path}: {message}")


class TapeError(DecompError, RuntimeError):
    """Misuse of an autodiff tape (non-scalar root, consumed tape, foreign tensor)"""


class NumericError(DecompError, ArithmeticError):
    """Numeric failure during evaluation"""


class DomainError(NumericError):
    """Function evaluated outside its domain (log/sqrt of non-positive input)"""

    def __init__(self, kind: str, shapes, detail: str):
        self.kind = kind
        super().__init__(f"domain error in '{kind}' for operand shapes {[tuple(s) for s in shapes]}: {detail}")


class DivisionByZeroError(NumericError):
    def __init__(self, kind: str, shapes):
        self.kind = kind
        super().__init__(f"division by zero in '{kind}' for operand shapes {[tuple(s) for s in shapes]}")


class NonFiniteError(NumericError):
    def __init__(self, kind: str, shapes, detail: str = "NaN/Inf in result"):
        self.kind = kind
        super().__init__(f"non-finite value in '{kind}' for operand shapes {[tuple(s) for s in shapes]}: {detail}")


class IntegrationError(NumericError):
    """Divergent normalising integral or quadrature that failed to converge"""
