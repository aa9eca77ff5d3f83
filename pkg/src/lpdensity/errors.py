"""Error taxonomy shared by all modules.

Two families matter for the CLI exit codes: failures to read or parse an
input file (InputError) and violations of an operation's stated
preconditions or of a domain invariant (PreconditionError).
"""


class InputError(ValueError):
    """A referenced file is missing, unreadable, or malformed."""


class PreconditionError(ValueError):
    """An operation precondition or a domain invariant does not hold."""


class DimensionMismatchError(PreconditionError):
    """Objects of different ambient dimensions were combined."""
