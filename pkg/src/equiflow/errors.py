"""Exception hierarchy shared across the package.

The command-line layer maps these onto process exit codes, so solver and
parsing code should raise the most specific class that applies.
"""


class EquiflowError(Exception):
    """Base class for all package-specific failures."""


class InputError(EquiflowError):
    """An input file is unreadable, unparseable, or fails validation."""


class MissingIsochroneError(InputError):
    """A required (node, mode) isochrone polygon is absent."""


class SolveError(EquiflowError):
    """An assignment problem cannot be solved as posed."""


class InfeasibleTripError(SolveError):
    """A trip's destination is unreachable for some demand that must move."""


class DegenerateObjectiveError(SolveError):
    """Every mode weight is zero, so the routing objective vanishes."""


class UndefinedMetricError(EquiflowError):
    """A reported metric has no defined value for the given inputs."""


class UndefinedGapError(UndefinedMetricError):
    """The compliant-vs-selfish travel-time gap is undefined (no private
    compliant demand to measure)."""
