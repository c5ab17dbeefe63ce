"""Exception hierarchy shared by the library and the command line."""


class CMVError(Exception):
    """Base class; ``exit_code`` is what the CLI returns for it."""

    exit_code = 1


class ConfigError(CMVError, ValueError):
    exit_code = 2


class ParseError(ConfigError):
    """Malformed coefficient or measure file."""


class DomainError(CMVError, ValueError):
    exit_code = 3


class SizeError(DomainError):
    pass


class PoleRegionError(DomainError):
    """Spectral parameter on (or numerically on) the unit circle."""


class IllPosedArcError(DomainError):
    """An arc endpoint sits on an eigenangle."""


class BranchError(DomainError):
    """Logarithm requested too close to a zero."""


class SingularError(CMVError, ArithmeticError):
    exit_code = 4


class TangentialParameterError(SingularError):
    pass


class IllConditionedError(SingularError):
    pass


class RankError(CMVError, ArithmeticError):
    exit_code = 5


class PreconditionError(CMVError, AssertionError):
    """Input operator fails a structural check (e.g. not unitary)."""

    exit_code = 3


class DegenerateDiskError(DomainError):
    """Weyl disk requested on the unit circle, where it degenerates."""
