"""Exception types raised by xormmap."""

from pathlib import Path
from typing import Optional, Union


class XorMmapError(Exception):
    """Base class for every error raised by this package."""


class MalformedInstanceError(XorMmapError, ValueError):
    """Instance data violates a structural rule (bad index, bad designation)."""


class InstanceParseError(MalformedInstanceError):
    """An instance or DIMACS-XOR file could not be parsed.

    Attributes:
        path: File being parsed (None for in-memory text)
        line: 1-indexed line number where parsing failed
    """

    def __init__(self, message: str, line: int, path: Optional[Union[str, Path]] = None) -> None:
        self.path = None if path is None else str(path)
        self.line = line
        location = f"{self.path}:{line}" if self.path is not None else f"line {line}"
        super().__init__(f"{location}: {message}")


class InvalidParameterError(XorMmapError, ValueError):
    """A numeric parameter is outside its valid range."""


class EnumerationBudgetError(XorMmapError, RuntimeError):
    """Exhaustive enumeration would exceed the configured bit cap."""

    def __init__(self, bits: int, cap: int) -> None:
        self.bits = bits
        self.cap = cap
        super().__init__(
            f"Enumeration over {bits} bits exceeds the cap of {cap} bits "
            f"(2^{bits} assignments). Raise the cap or use a smaller instance."
        )


class BudgetExceededError(XorMmapError, RuntimeError):
    """An oracle call hit its node or wall-time cap before deciding."""

    def __init__(self, nodes: int, reason: str) -> None:
        self.nodes = nodes
        self.reason = reason
        super().__init__(f"Oracle budget exceeded after {nodes} nodes ({reason})")
