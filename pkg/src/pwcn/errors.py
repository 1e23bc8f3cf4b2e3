"""Exception hierarchy shared across the package.

Every error raised by the library derives from PwcnError so the CLI can
map failures to its exit-code contract (1 = data/format error) without
enumerating causes.
"""


class PwcnError(Exception):
    """Base class for all errors raised by this package."""


class XmlError(PwcnError):
    """Malformed review XML (carries the source line where known)."""


class AlignmentError(PwcnError):
    """Character spans, token counts, or FORM columns fail to line up."""


class StructureError(PwcnError):
    """Dependency heads do not form a valid forest (cycle, bad index)."""


class FormatError(PwcnError):
    """Binary or text file violates its declared layout."""


class ShapeError(PwcnError):
    """Tensor arguments disagree with the declared shapes."""


class DataError(PwcnError):
    """Values are out of the range a contract allows."""


class NumericError(PwcnError):
    """Non-finite values encountered where finite ones are required."""
