"""Exception hierarchy shared by all ars2d modules."""


class ArsError(Exception):
    """Base class for all errors raised by ars2d."""


class ExprSyntaxError(ArsError):
    """Malformed expression text.

    Carries the byte offset of the failure and the set of token kinds
    that would have been accepted there.
    """

    def __init__(self, offset, expected, message=None):
        self.offset = offset
        self.expected = tuple(expected)
        if message is None:
            message = "syntax error at offset %d, expected %s" % (
                offset,
                " or ".join(self.expected),
            )
        super().__init__(message)


class UnknownIdentifierError(ExprSyntaxError):
    """Identifier outside the known variables, constants and functions."""

    def __init__(self, offset, name):
        self.name = name
        super().__init__(
            offset,
            ("x", "y", "pi", "function name"),
            "unknown identifier %r at offset %d" % (name, offset),
        )


class DomainError(ArsError):
    """Expression evaluated outside its domain (1/0, sqrt of negative, ...)."""

    def __init__(self, message, subexpression=None, point=None):
        self.subexpression = subexpression
        self.point = point
        if subexpression is not None:
            message = "%s in %r" % (message, subexpression)
        if point is not None:
            message = "%s at (%.17g, %.17g)" % (message, point[0], point[1])
        super().__init__(message)


class SpecError(ArsError):
    """Invalid structure description (file schema, periodicity, ...)."""


class DegeneratePoint(ArsError):
    """Brackets up to third order do not span the tangent plane at a point."""

    def __init__(self, point, message=None):
        self.point = tuple(point)
        if message is None:
            message = "degenerate point at (%.17g, %.17g): third-order brackets do not span" % (
                point[0],
                point[1],
            )
        super().__init__(message)


class SaddleAmbiguity(ArsError):
    """A marching-squares cell stayed ambiguous after sub-sampling."""


class NotRegular(ArsError):
    """Newton refinement onto the singular locus stalled (gradient too small)."""


class TangencyNotTransversal(ArsError):
    """The tangency angle defect has a root without a sign change."""


class CurveNotClosed(ArsError):
    """Operation requires a closed singular curve (torus component)."""


class LiftUnstable(ArsError):
    """Continuous angle lift jumped too far between samples, or the
    accumulated rotation is too far from an integer multiple of pi."""


class AdjacencyAmbiguous(ArsError):
    """A singular curve does not separate exactly one negative from one
    positive region at the working resolution."""


class Unreachable(ArsError):
    """No finite-cost grid path between the requested points."""

    def __init__(self, source, target, resolution):
        self.source = tuple(source)
        self.target = tuple(target)
        self.resolution = resolution
        super().__init__(
            "no finite-cost path from (%g, %g) to (%g, %g) at resolution %d"
            % (source[0], source[1], target[0], target[1], resolution)
        )


class StepUnstable(ArsError):
    """Hamiltonian drifted beyond tolerance during geodesic integration."""


class InadmissibleSample(ArsError):
    """A curve sample has a velocity outside the distribution."""
