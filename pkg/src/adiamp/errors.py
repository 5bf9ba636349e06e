"""Exception hierarchy shared by all modules."""


class AdiampError(Exception):
    """Base class for every error raised by the package."""


class NonFinite(AdiampError, ValueError):
    pass


class DefectiveMatrix(AdiampError):
    """Raised at (or numerically indistinguishable from) an exceptional point."""


class PairingAmbiguous(AdiampError):
    pass


class BandSwap(AdiampError):
    """Successive eigenvectors along a path lost continuity."""


class StencilBandSwap(BandSwap):
    pass


class ZeroOverlap(AdiampError):
    pass


class BranchJump(AdiampError):
    """A single link phase exceeded pi/2; the discretization is too coarse."""


class NoConvergence(AdiampError):
    pass


class NotSimilarityReducible(AdiampError):
    pass


class IllConditioned(AdiampError):
    pass


class UnsupportedBranch(AdiampError):
    pass


class Unstable(AdiampError):
    """Integrated intensity overflowed the guard."""


class StepTooLarge(AdiampError, ValueError):
    pass


class NotAdiabatic(AdiampError):
    pass


class PTBroken(AdiampError, ValueError):
    pass


class DomainError(AdiampError, ValueError):
    pass


class RankDeficient(AdiampError):
    pass


class ConfigError(AdiampError, ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


class GapUndefined(UserWarning):
    """The SSH gap formula does not apply; reported, not fatal."""
