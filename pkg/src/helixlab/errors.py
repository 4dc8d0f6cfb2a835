"""Exception types shared across helixlab."""


class HelixlabError(Exception):
    """Base class for every error raised by the library."""


class ParseError(HelixlabError):
    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.message = message
        self.position = position


class UnknownParameter(HelixlabError):
    def __init__(self, name, position=None):
        where = "" if position is None else f" (at position {position})"
        super().__init__(f"unknown identifier {name!r}{where}")
        self.name = name
        self.position = position


class DomainError(HelixlabError):
    """Evaluation left the domain of a function (log, sqrt, division, power)."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class NonRegularCurve(HelixlabError):
    def __init__(self, t, speed):
        super().__init__(f"curve is not regular at t={t!r} (|alpha'|={speed:.3e})")
        self.t = t
        self.speed = speed


class FrameDegenerate(HelixlabError):
    """The Gram-Schmidt residual of order ``index`` vanished.

    ``partial`` holds the valid frame vectors V_1..V_{index-1}.
    """

    def __init__(self, index, t, partial, curvatures=()):
        super().__init__(f"Frenet frame degenerates at order {index} (t={t!r})")
        self.index = index
        self.t = t
        self.partial = partial
        self.curvatures = curvatures


class SingularPoint(HelixlabError):
    def __init__(self, u, v, message="surface is singular"):
        super().__init__(f"{message} at (u, v)=({u!r}, {v!r})")
        self.u = u
        self.v = v


class NotSupported(HelixlabError):
    pass


class EmptyGrid(HelixlabError):
    pass


class DomainEscape(HelixlabError):
    def __init__(self, u, v, trace=None):
        super().__init__(f"trace left the parameter domain at (u, v)=({u!r}, {v!r})")
        self.u = u
        self.v = v
        self.trace = trace


class UmbilicPoint(HelixlabError):
    """Principal directions became undefined; ``trace`` holds the truncated trace."""

    def __init__(self, u, v, trace=None):
        super().__init__(f"umbilic point at (u, v)=({u!r}, {v!r})")
        self.u = u
        self.v = v
        self.trace = trace


class NotPlanar(HelixlabError):
    pass


class InvalidNormal(HelixlabError):
    pass


class BranchDegenerate(HelixlabError):
    pass
