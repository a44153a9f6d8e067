"""Custom exceptions."""


class HgampError(Exception):
    """Generic exception for hgamp."""

    def __init__(self, msg, original=None):
        """Initialize new exception."""
        if original is not None:
            msg = f"{msg}: {original}"
        super().__init__(msg)
        self.original = original


class InstanceSyntaxError(HgampError):
    """Raised for malformed instance files, carrying the offending line number."""

    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        self.message = message
        location = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{location}: syntax error: {message}")


class InstanceValidationError(HgampError):
    """Raised when a syntactically valid instance violates a semantic rule."""

    def __init__(self, field, message):
        self.field = field
        self.message = message
        super().__init__(f"invalid value for '{field}': {message}")


class InfeasibleInstanceError(HgampError):
    """Total depot capacity cannot cover the total demand."""

    pass


class StructuralError(HgampError):
    """A solution violates the visitation invariant."""

    pass


class IntegrityError(HgampError):
    """A stored objective does not match its recomputation."""

    pass


class InvalidMoveError(HgampError):
    """A move references endpoints that do not fit the current solution."""

    pass


class ConstructionError(HgampError):
    """A constructive heuristic could not place every customer."""

    pass


class RepairError(HgampError):
    """Penalty escalation hit its cap with violations left."""

    pass


class OracleSizeError(HgampError):
    """Instance too large for exhaustive enumeration."""

    pass


class InternalInvariantError(HgampError):
    """An internal structure lost an invariant it must always hold."""

    pass
