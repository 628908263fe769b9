"""Exception taxonomy shared by all modules.

Exit-code mapping used by the CLI: ValidationError -> 2,
NumericalError -> 3, verdict-negative results -> 4.
"""


class BilliardsError(Exception):
    """Base class for all package errors."""


class ValidationError(BilliardsError):
    """Bad input: rejected before any numerics run."""


class NumericalError(BilliardsError):
    """A numerical procedure failed to meet its tolerance."""


# -- curve construction ------------------------------------------------------

class NonConvex(ValidationError):
    """Curvature changes sign or vanishes beyond tolerance."""


class DegenerateSpec(ValidationError):
    """Curve parameters degenerate (zero radius, empty range, ...)."""


class OutOfDomain(ValidationError):
    """Arc-length argument outside the curve's domain."""


class QuadratureFailure(NumericalError):
    """Adaptive quadrature did not converge to tolerance."""


# -- line space --------------------------------------------------------------

class ThroughOrigin(ValidationError):
    """Line passes through the duality origin; polar dual undefined."""


class InvalidChord(ValidationError):
    """Chord endpoints do not define an oriented line (coincident, ...)."""


# -- billiard map ------------------------------------------------------------

class RootFindFailure(NumericalError):
    """Second-intersection solver failed to bracket or converge."""


class EscapesDomain(BilliardsError):
    """Orbit leaves an open arc; carries the completed prefix."""

    def __init__(self, message, prefix=None):
        super().__init__(message)
        self.prefix = prefix


class MapUndefined(ValidationError):
    """Phase point outside the domain of the billiard map."""


# -- interpolating-series construction ---------------------------------------

class IllConditioned(NumericalError):
    """Jet extraction scales disagree above tolerance."""


class OrderTooHigh(ValidationError):
    """Requested series order beyond the supported cap."""


class ProfileNoise(NumericalError):
    """Drift-profile fit residual above tolerance."""


# -- normal form -------------------------------------------------------------

class LevelCurveEscape(NumericalError):
    """Level curve of the interpolating Hamiltonian leaves the window."""


class OutsideValidity(ValidationError):
    """Chart evaluation requested outside its validity window."""


# -- foliation ---------------------------------------------------------------

class SectorTooLarge(ValidationError):
    """Gluing sector violates the disjoint-iterate precondition."""


class OrbitEscape(NumericalError):
    """Extension-by-dynamics orbit left the window before the
    fundamental domain was reached."""


class GradientLoss(NumericalError):
    """Foliation field gradient degenerates on the window."""


# -- caustics ----------------------------------------------------------------

class CuspDetected(BilliardsError):
    """Envelope has a cusp (support radius of curvature <= 0)."""

    def __init__(self, message, cusp_mask=None):
        super().__init__(message)
        self.cusp_mask = cusp_mask


class LeavesCross(NumericalError):
    """Caustic ladder violates nesting."""


class NoRealTangency(ValidationError):
    """Chord is tangent to no real confocal conic."""


# -- conjugacy ---------------------------------------------------------------

class Inconclusive(NumericalError):
    """Tail analysis could not certify convergence or divergence."""


class InconclusiveInput(ValidationError):
    """Conjugacy classification fed an inconclusive length report."""


class VerdictNegative(ValidationError):
    """No conjugating boundary map exists for this pair."""


# -- CLI ---------------------------------------------------------------------

class ConfigError(ValidationError):
    """Malformed or inconsistent run configuration."""
