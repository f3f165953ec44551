"""Exception types shared across the package."""


class EgdynError(Exception):
    """Base class for all egdyn errors."""


class InvalidGameError(EgdynError):
    """Payoff matrix is malformed: non-square, non-finite, or wrong size."""


class SimplexError(EgdynError):
    """A vector violates the simplex invariants (negativity or bad sum)."""


class DegenerateGameError(EgdynError):
    """The game is too degenerate for the requested analysis, e.g. two
    indifference sets coincide or a reference point cannot be separated
    from the line arrangement."""


class NumericalError(EgdynError):
    """An integration or root-finding step failed beyond recovery."""
