"""Exception hierarchy shared by all conebound modules."""


class ConeboundError(Exception):
    """Base class for every error raised by conebound."""


class SingularMetric(ConeboundError):
    """The differential has rank < m, or the metric is not positive-definite."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class DegeneratePlane(ConeboundError):
    """The two tangent vectors given for a sectional curvature are not orthonormal."""


class ApexSample(ConeboundError):
    """A sample coincides with the cone vertex."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class DegenerateCone(ConeboundError):
    """No cone of width < pi/2 with the given vertex contains the points."""

    def __init__(self, message, angle=None):
        super().__init__(message)
        self.angle = angle


class EmptyInput(ConeboundError):
    pass


class InvalidParameters(ConeboundError, ValueError):
    """Auxiliary parameters violate their admissible ranges."""


class HypothesisViolated(ConeboundError):
    """The strict tension/energy inequality assumed by the contradiction argument fails."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class CodimensionOutOfRange(ConeboundError):
    pass


class PreconditionUnverified(ConeboundError):
    pass


class SearchFailure(ConeboundError):
    """A direction search ended above the value guaranteed to exist."""


class QuadratureFailure(ConeboundError):
    pass


class EvaluationFailure(ConeboundError):
    pass


class ParseError(ConeboundError):
    def __init__(self, message, line=None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


class UnknownFamily(ConeboundError):
    pass


class InvalidFlag(ConeboundError):
    pass


class MissingSeries(ConeboundError):
    pass
