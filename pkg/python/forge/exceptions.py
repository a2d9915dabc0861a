"""
Typed errors raised by forge.
Every error carries a human-readable detail and an optional context dict
(file, line, position, ...) that the CLI renders as key=value pairs.
"""

from enum import Enum
from typing import Any, Dict, List, Optional


class ForgeError(Exception):
    """Base class for all errors raised by forge."""

    def __init__(self, detail: str, context: Optional[Dict[str, Any]] = None) -> None:
        super().__init__(detail)
        self.detail = detail
        self.context: Dict[str, Any] = context or {}

    def __repr__(self) -> str:
        return f"{type(self).__name__}(detail={self.detail!r}, context={self.context!r})"

    def render(self) -> str:
        "One-line form used on stderr by the CLI."
        extra = " ".join(f"{key}={value}" for key, value in self.context.items())
        line = f"{type(self).__name__}: {self.detail}"
        return f"{line} [{extra}]" if extra else line


class ParseErrorKind(str, Enum):
    UNKNOWN_SYMBOL = "UnknownSymbol"
    UNBALANCED_PARENTHESIS = "UnbalancedParenthesis"
    UNCLOSED_RING = "UnclosedRing"
    BAD_BRACKET_ATOM = "BadBracketAtom"
    VALENCE_OVERFLOW = "ValenceOverflow"
    EMPTY_INPUT = "EmptyInput"
    DISCONNECTED_PARTS = "DisconnectedParts"


class ParseError(ForgeError):
    """A SMILES string could not be turned into a molecular graph."""

    def __init__(self, kind: ParseErrorKind, position: int, detail: Optional[str] = None) -> None:
        super().__init__(
            detail or kind.value, {"kind": kind.value, "position": position}
        )
        self.kind = kind
        self.position = position

    def __repr__(self) -> str:
        return f"ParseError(kind={self.kind.value}, position={self.position})"


class ConfigValidationError(ForgeError):
    """A configuration file or flag combination failed validation."""

    def __init__(
        self,
        detail: str,
        errors: Optional[List[Dict[str, Any]]] = None,
        context: Optional[Dict[str, Any]] = None,
    ) -> None:
        super().__init__(detail, context)
        self.errors = errors or []


class DatasetError(ForgeError):
    """An input file is unreadable or lacks a required column."""


class LengthMismatchError(ForgeError):
    pass


class EmptyTrainingSetError(ForgeError):
    pass


class MissingLabelsError(ForgeError):
    pass


class DomainError(ForgeError):
    pass


class SingleClassError(ForgeError):
    pass


class NoPositivesError(ForgeError):
    pass


class WidthMismatchError(ForgeError):
    pass


class BadKError(ForgeError):
    pass


class TrainingDivergedError(ForgeError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch: int, loss: float) -> None:
        super().__init__("non-finite training loss", {"epoch": epoch, "loss": loss})
        self.epoch = epoch
        self.loss = loss


class SplitRoutingError(ForgeError):
    """An MMP was routed to a prediction mode that does not match its split membership."""
