"""Exception types shared across the package."""


class GsqgError(Exception):
    """Base class for all package-specific failures."""


class InvalidParameterError(GsqgError, ValueError):
    """Argument outside its admissible range."""


class NoRootError(GsqgError):
    """The bending criterion has no zero for the requested kernel order."""


class DegenerateAnnulusError(GsqgError):
    """Annulus inner radius meets or exceeds the outer radius."""


class InfeasibleAreaError(GsqgError):
    """No admissible far closure reaches the requested enclosed area."""


class ResolutionTooCoarseError(GsqgError):
    """Node spacing too coarse to honor the requested construction."""


class DegenerateNodesError(GsqgError):
    """Two consecutive contour nodes coincide."""


class InfeasibleEpsilonError(GsqgError):
    """Requested symmetric-difference budget below the achievable floor."""


class SelfIntersectionError(GsqgError):
    """Contour crosses itself.

    ``time`` carries the simulation time when the crossing was detected
    during evolution, and is None for static construction checks.
    """

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class UnresolvedSingularityError(GsqgError):
    """Node layout cannot resolve the kernel singularity (spacing ratio
    or parametrization-uniformity bound violated)."""


class ProbeOutOfRangeError(InvalidParameterError):
    """Probe abscissa outside the validated window [2*delta, M/2]."""


class AlphaZeroUnsupportedError(InvalidParameterError):
    """Operation undefined at alpha = 0 (leading term divides by alpha)."""


class NodeNotFoundError(GsqgError):
    """No contour node coincides with the requested probe point."""


class CflViolationError(GsqgError):
    """Time step exceeds the stability heuristic for the node spacing."""
