"""Exception hierarchy shared by the library and the command line."""


class RegLabError(Exception):
    """Base class for every error raised by reglab."""

    kind = "error"


class StructuralError(RegLabError, ValueError):
    """Objects defined over different sample spaces, or malformed shapes."""

    kind = "structural"


class InputError(RegLabError, ValueError):
    """Bad user input: unparsable files, unknown labels, invalid parameters."""

    kind = "input"


class PreconditionError(RegLabError, ValueError):
    """An operation was called outside its mathematical domain."""

    kind = "precondition"


class CapacityError(RegLabError):
    """A problem is too large for an exhaustive routine."""

    kind = "capacity"
