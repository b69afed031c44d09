"""Exception hierarchy shared across the package."""


class TreecompError(Exception):
    """Base class for all errors raised by treecomp."""


class ParseError(TreecompError):
    """Malformed bracketed tree text. ``offset`` is the byte offset of the problem."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class DataError(TreecompError):
    """Bad input data: corpus records, embedding files, checkpoints."""


class ShapeError(TreecompError, ValueError):
    pass


class ModeError(TreecompError, ValueError):
    """A cell was called with inputs that do not fit its configured mode."""


class StateError(TreecompError, RuntimeError):
    """Backward pass requested without the forward caches it needs."""


class NumericsError(TreecompError, FloatingPointError):
    pass


class InvalidArgument(TreecompError, ValueError):
    pass


class IoError(TreecompError, OSError):
    """A required file could not be read or written."""
