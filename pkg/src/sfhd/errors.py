"""Exception hierarchy shared by the numerical modules."""


class SFHDError(Exception):
    """Base class for every computational failure raised by this package."""


class NonConvergenceError(SFHDError):
    """A series hit its term cap while its terms were still growing."""


class TruncationOverflow(SFHDError):
    """The truncated kernel series is unreliable for the requested arguments."""


class ContourFailure(SFHDError):
    """Numerical Laplace inversion failed its node-doubling self-check."""


class QuadratureFailure(SFHDError):
    """Successive quadrature refinements disagree beyond tolerance."""


class NonConvergent(SFHDError):
    """A spectral integral does not show a decaying tail."""


class SymmetryViolation(SFHDError):
    """Harmonic coefficients do not describe a real-valued field."""
