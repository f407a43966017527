"""Exception and warning types raised across the package."""


class LegendrianError(Exception):
    """Base class for all errors raised by this package."""


class AllCoefficientsZero(LegendrianError):
    """A nonzero balance defect cannot be removed because X and Y are constant."""


class SingularSystem(LegendrianError):
    """Interpolation constraints are dependent or inconsistent."""


class TangentialCrossing(LegendrianError):
    """A double point of a planar curve has (nearly) parallel tangents."""


class SeedGridTooCoarse(LegendrianError):
    """Newton refinement failed from every seed of a candidate crossing."""


class SingularDiagram(LegendrianError):
    """The planar velocity (X', Y') vanishes somewhere."""


class ZTie(LegendrianError):
    """Both strands of a crossing sit at (nearly) the same height."""


class NoRoomForCircle(LegendrianError):
    """No admissible radius keeps an inserted loop clear of the diagram."""


class SelfIntersection(LegendrianError):
    """The spatial lift of an assembled curve is not embedded."""


class MalformedCode(LegendrianError):
    """A Gauss code does not describe a single closed curve."""


class DegreeCapExceeded(LegendrianError):
    """Degree escalation hit its cap without reproducing the target knot."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


class CuspIllConditioned(LegendrianError):
    """y' and z' vanish at incompatible rates near a front cusp."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class EqualSlopes(LegendrianError):
    """Two front strands cross with the same slope."""


class NotInRightHalfSphere(LegendrianError):
    """The curve leaves the open half-sphere x1 > 0."""


class NotLegendrian(LegendrianError):
    """A curve fails the Legendrian residual check."""


class DegreeTooSmall(LegendrianError):
    """The polynomial degree parameter is too small for the requested system."""


class AtInfinity(LegendrianError):
    """The point (1, 0) of S^3 has no image in R^3."""


class NoConvergence(LegendrianError):
    """Newton iteration for the forward evolution map did not converge."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class NotEscapedInGrid(LegendrianError):
    """The time grid ends before the curve leaves the ball."""


class DegreeTooLowWarning(UserWarning):
    """Fourier truncation discards more energy than the tolerance allows."""
