"""Exception types raised by the solvers."""


class QuasiNewtonError(ArithmeticError):
    """Base class for numerical failures in the quasi-Newton solvers."""


class DegenerateUpdateError(QuasiNewtonError):
    """A scalar denominator of an update (s'y, s'Bs, y'Hy, ...) vanished."""


class SingularMatrixError(QuasiNewtonError):
    """A small middle matrix could not be factorized safely."""


class BreakdownError(QuasiNewtonError):
    """A recursive baseline hit a vanishing rank-one denominator."""


class StaleStateError(RuntimeError):
    """A built state was used after its pair buffer changed."""


class InstanceGenerationError(RuntimeError):
    """The simulated line search could not produce a valid pair."""
