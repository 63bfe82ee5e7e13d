"""Exception types shared across the package."""


class IsokinError(Exception):
    """Base class for all package errors."""


class ConfigError(IsokinError):
    """Config file failed to parse or validate."""


class SingularInput(IsokinError):
    """A point lies in the singular set of a deformation primitive."""


class OrderViolation(IsokinError):
    """A bend stage is followed by another stage in a composition."""

    def __init__(self, stage_index, message=None):
        self.stage_index = stage_index
        super().__init__(message or f"stage {stage_index} follows a bend stage")


class NotSkew(IsokinError):
    """vee applied to a matrix that is not (skew-)structured."""


class AngleNearPi(IsokinError):
    """Rotation logarithm requested outside the principal branch."""


class UndefinedNormal(IsokinError):
    """Curve normal direction undefined (curvature vanishes at the base)."""


class StateUndefined(IsokinError):
    """A finite-difference probe left the valid domain of the deformation."""


class NoConvergence(IsokinError):
    """Iterative solver ran out of iterations."""

    def __init__(self, residual, iterations, message=None):
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            message
            or f"no convergence: residual {residual:.3e} after {iterations} iterations"
        )


class Unreachable(IsokinError):
    """Target pose cannot be reached by an inextensible curve of this length."""


class RankDeficient(IsokinError):
    """Jacobian rank deficient even after damping."""


class CheckFailed(IsokinError):
    """A required matrix property (e.g. positive definiteness) does not hold."""


class IllConditioned(IsokinError):
    """Least-squares system effectively rank deficient."""


class NotSymmetric(IsokinError):
    """Matrix expected to be symmetric is not."""


class NotIsochoric(IsokinError):
    """Deformation gradient determinant deviates from 1."""


class NonRigidTopPlane(IsokinError):
    """Top plane deformed non-rigidly; boundary conditions are violated."""


class NegativeCavity(IsokinError):
    """Source strength negative where a non-negative cavity is required."""


class ZeroDisplacement(IsokinError):
    """Error metric undefined: reference displacement is zero."""


class IdMismatch(IsokinError):
    """Node sets are not id-aligned."""


class ParseError(IsokinError):
    """Node file malformed."""

    def __init__(self, line, message):
        self.line = line
        super().__init__(f"line {line}: {message}")


class DuplicateId(ParseError):
    """Duplicate node id in a node file."""


class NonFinite(ParseError):
    """Non-finite coordinate in a node file."""
