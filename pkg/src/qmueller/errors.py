"""Exception types raised across the package."""


class PolarimetryError(Exception):
    pass


class DegenerateIntensity(PolarimetryError, ValueError):
    pass


class InvalidTransmittance(PolarimetryError, ValueError):
    pass


class InvalidDepolarizer(PolarimetryError, ValueError):
    pass


class InvalidConvexWeights(PolarimetryError, ValueError):
    pass


class InvalidProbability(PolarimetryError, ValueError):
    pass


class NotPhysical(PolarimetryError, ValueError):
    def __init__(self, message, eigenvalues=None):
        super().__init__(message)
        self.eigenvalues = eigenvalues


class DegenerateDecomposition(PolarimetryError, ArithmeticError):
    """Lu-Chipman split hit a singular diattenuator.

    ``partial`` holds whatever factors were computed before the failure.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial or {}


class UnsupportedModeCount(PolarimetryError, ValueError):
    pass


class NotUnitary(PolarimetryError, ValueError):
    def __init__(self, message, deviation=None):
        super().__init__(message)
        self.deviation = deviation


class NoSingleModeDilation(PolarimetryError, ValueError):
    """A 2x2 block cannot sit inside a 3x3 unitary.

    Needs at least one singular value equal to one; ``singular_values``
    carries the offending pair.
    """

    def __init__(self, message, singular_values=None):
        super().__init__(message)
        self.singular_values = singular_values


class BasisMismatch(PolarimetryError, ValueError):
    pass


class TruncationViolation(PolarimetryError, ValueError):
    pass


class NotMuellerRepresentable(PolarimetryError):
    """The channel does not map Stokes operators onto their linear span."""

    def __init__(self, residual, worst_component, component_residuals=None):
        super().__init__(
            f"channel is not Mueller-representable: relative residual {residual:.3e} "
            f"(worst component S{worst_component})"
        )
        self.residual = residual
        self.worst_component = worst_component
        self.component_residuals = component_residuals


class DegenerateProbeSet(PolarimetryError, ValueError):
    pass


class SchemaVersionError(PolarimetryError, ValueError):
    pass


class NegativeWeightFunction(PolarimetryError, ValueError):
    """Raised where a channel is required but the weight function dips below zero."""

    def __init__(self, failure):
        super().__init__(f"weight function is negative (min {failure.min_value:.3e})")
        self.failure = failure
