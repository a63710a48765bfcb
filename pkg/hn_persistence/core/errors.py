"""
Exception hierarchy shared by the library and the command line.

Every error carries enough context to be reported on one line; the CLI maps
each class to its own exit code.
"""

from typing import List, Optional


class HNError(Exception):
    """Base class for all library errors"""
    exit_code = 1


class UsageError(HNError, ValueError):
    """Malformed call: dimension mismatch, unsupported parameter, bad shape"""
    exit_code = 2


class ParseError(HNError):
    """Syntax error in a module, stability or config file"""
    exit_code = 3

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        location = ""
        if line is not None:
            location = f" (line {line}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + location)


class ValidationError(HNError):
    """One or more named invariants are violated by an input value"""
    exit_code = 4

    def __init__(self, diagnostics: List[str]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


class BudgetExceeded(HNError):
    """An enumeration would exceed its configured budget"""
    exit_code = 5


class RefinementNeeded(HNError):
    """A grid does not refine the breakpoints a stability condition needs"""
    exit_code = 2

    def __init__(self, missing: List[List[object]]):
        self.missing = missing
        listing = ", ".join(
            f"axis {axis}: {[str(c) for c in coords]}" for axis, coords in enumerate(missing) if coords
        )
        super().__init__(f"grid must be refined with {listing}")


class InvariantViolation(HNError):
    """A theorem-backed property failed; always a bug"""
    exit_code = 6

    def __init__(self, invariant: str, detail: str = ""):
        self.invariant = invariant
        super().__init__(f"{invariant}: {detail}" if detail else invariant)
