"""Exception hierarchy.

Certification routines never raise on a failed inequality; they return a
:class:`~shadow_forge.certificate.Certificate`.  The classes below are for
broken preconditions and numerical breakdown.
"""


class ShadowForgeError(Exception):
    """Base class for every error raised by this package."""


class InvalidRateParams(ShadowForgeError, ValueError):
    pass


class InvalidSign(ShadowForgeError, ValueError):
    pass


class IndexOutOfRange(ShadowForgeError, IndexError):
    pass


class ShapeMismatch(ShadowForgeError, ValueError):
    pass


class FiberMismatch(ShadowForgeError, ValueError):
    """A vector handed to a fiber norm does not lie in that fiber."""


class ProjectionAlgebraError(ShadowForgeError, ValueError):
    pass


class SingularUnstableBlock(ShadowForgeError, ArithmeticError):
    """The cocycle restricted to the unstable fiber is numerically singular."""


class NoFiniteD(ShadowForgeError, ArithmeticError):
    pass


class StepTooCoarse(ShadowForgeError, ArithmeticError):
    pass


class TailBoundTooLarge(ShadowForgeError, ArithmeticError):
    pass


class QuadratureUnresolved(ShadowForgeError, ArithmeticError):
    pass


class NotContractive(ShadowForgeError, ArithmeticError):
    """The contraction constant ``q`` is not below one."""


class Diverged(ShadowForgeError, ArithmeticError):
    pass


class SingularAssembly(ShadowForgeError, ArithmeticError):
    pass


class NewtonStalled(ShadowForgeError, ArithmeticError):
    pass


class ConfigError(ShadowForgeError, ValueError):
    pass
