"""Exception hierarchy shared by all comixup modules."""


class ComixError(Exception):
    """Base class for all errors raised by this package."""


# --- container / io ---

class BadMagic(ComixError):
    pass


class HeaderParse(ComixError):
    pass


class LengthMismatch(ComixError):
    pass


class MixedDimensions(ComixError):
    pass


class DecodeError(ComixError):
    pass


class EmptyDirectory(ComixError):
    pass


# --- saliency ---

class DegenerateSaliency(ComixError):
    pass


class NegativeSaliency(ComixError):
    pass


class InvalidGridSide(ComixError):
    pass


class NotPSD(ComixError):
    pass


# --- energy / labeling ---

class InvalidColumn(ComixError):
    pass


class DimensionMismatch(ComixError):
    pass


class IndexOutOfRange(ComixError):
    pass


# --- solvers ---

class NotSubmodular(ComixError):
    pass


class TooLarge(ComixError):
    pass
