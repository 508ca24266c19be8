"""Exception hierarchy.

Three families, matching the CLI exit codes: input/validation problems
(exit 2), physically impossible requests (exit 3) and numerical failures
(exit 4).
"""


class EmergenceError(Exception):
    pass


class InputError(EmergenceError, ValueError):
    pass


class PhysicsError(EmergenceError):
    pass


class NumericalError(EmergenceError):
    pass


# input / validation
class NonPowerOfTwo(InputError):
    pass


class DegenerateInterval(InputError):
    pass


class BasisMismatch(InputError):
    pass


class NotHermitian(InputError):
    pass


class DomainViolation(InputError):
    pass


class GridTooLarge(InputError):
    pass


class GridMismatch(InputError):
    pass


# physics
class UncertaintyViolation(PhysicsError):
    pass


class MinimalUncertaintyBoundary(PhysicsError):
    """nu == 1 exactly: the state is the pure Gaussian packet, not a mixed ME packet."""


class NotMinimal(PhysicsError):
    pass


class Infeasible(PhysicsError):
    pass


class PauliExclusion(PhysicsError):
    pass


class ProbeNotLocal(PhysicsError):
    pass


# numerics
class NoConvergence(NumericalError):
    pass


class TruncationInsufficient(NumericalError):
    pass


class NonFinite(NumericalError):
    pass


class ResolutionInsufficient(NumericalError):
    pass


class BoundaryLeak(UserWarning):
    """A grid wavefunction does not decay at the box edges."""
