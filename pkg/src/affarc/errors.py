"""Exception hierarchy shared by all affarc modules."""


class AffarcError(Exception):
    """Base class for library errors."""


class DegenerateMap(AffarcError):
    pass


class OutOfLogDomain(AffarcError):
    pass


class TooFarFromIdentity(AffarcError):
    pass


class ZeroField(AffarcError):
    pass


class NotAZipper(AffarcError):
    pass


class EmptySet(AffarcError):
    pass


class PointNotOnArc(AffarcError):
    pass


class BudgetExceeded(AffarcError):
    pass


class FixedPointOnArc(AffarcError):
    pass


class NotAdvancing(AffarcError):
    pass


class NoSuitableWord(AffarcError):
    pass


class DegenerateInput(AffarcError):
    pass


class IsParabolic(AffarcError):
    """The arc is a parabolic or straight segment, so no multizipper is built."""


class NotAChain(AffarcError):
    pass


class Reducible(AffarcError):
    pass


class CannotSeparate(AffarcError):
    pass


class NoCover(AffarcError):
    pass


class AmbiguousPlacement(AffarcError):
    pass


class NotJordan(AffarcError):
    pass
