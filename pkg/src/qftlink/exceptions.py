"""Exception types raised by qftlink."""


class QftLinkError(Exception):
    """Base class for all package errors."""


class PreconditionError(QftLinkError, ValueError):
    """An input violates a documented precondition."""


class DistanceTooSmallError(PreconditionError):
    """Two curves come too close for the Gauss integrand to be resolved."""


class DegenerateProjectionError(QftLinkError):
    """No generic projection direction was found after the allowed retries."""


class OracleDisagreementError(QftLinkError):
    """Two independent linking-number engines disagree after refinement."""


class MomentMismatchError(PreconditionError):
    """A scalar co-primitive was requested for a density with nonzero integral."""


class SeparationMarginError(PreconditionError):
    """Loops are not spacelike separated by the required smearing margin."""


class SurfaceDependenceError(QftLinkError):
    """A commutator changed with the choice of co-primitive surface."""


class UnresolvedGridError(QftLinkError):
    """Two refinement levels of a quadrature disagree beyond threshold."""


class NonDecayingIntegrandError(QftLinkError):
    """A mass-shell integrand does not decay at the radial cutoff."""


class SceneError(QftLinkError):
    """A scene file failed to parse or validate."""

    def __init__(self, diagnostics):
        if isinstance(diagnostics, str):
            diagnostics = [diagnostics]
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))
