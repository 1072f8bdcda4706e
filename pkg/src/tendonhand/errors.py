"""Exception types shared across the package."""


class HandError(Exception):
    """Base class for every error raised by tendonhand."""


class SpecParseError(HandError):
    """The hand-spec file could not be parsed."""


class SpecValidationError(HandError, ValueError):
    """A hand-spec field violates one of its invariants.

    ``path`` is the dotted location of the offending field, e.g.
    ``joints.pip.rr1_mm``.
    """

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class JointLimitError(HandError, ValueError):
    def __init__(self, joint: str, angle_deg: float, lo_deg: float, hi_deg: float):
        self.joint = joint
        self.angle_deg = angle_deg
        self.bounds_deg = (lo_deg, hi_deg)
        super().__init__(
            f"joint {joint} angle {angle_deg:g} deg outside limits "
            f"[{lo_deg:g}, {hi_deg:g}] deg"
        )


class UnsupportedGeometryError(HandError, ValueError):
    pass


class DegenerateGeometryError(HandError, ValueError):
    pass


class UnderdeterminedError(HandError, ValueError):
    def __init__(self, joints, message: str = ""):
        self.joints = tuple(joints)
        msg = message or "tendon system does not constrain joints"
        super().__init__(f"{msg}: {', '.join(self.joints)}")


class DomainError(HandError, ValueError):
    pass
