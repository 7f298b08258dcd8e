"""Exception types shared across the library."""


class RenormError(Exception):
    """Base class for all library-specific failures."""


class IdentityMap(RenormError):
    """Operation undefined for the identity (every point is fixed)."""


class PoleAt(RenormError):
    """Evaluation requested at the pole of a Moebius map."""


class DegenerateBreak(RenormError):
    """Break size equal to 1; the break is not actually there."""


class NonMonotone(RenormError):
    """A branch fails to be strictly increasing on its domain."""


class OutOfDomain(RenormError):
    """Point outside the domain of a branch function."""


class DomainMismatch(RenormError):
    """Chain composition with codomain/domain gap above tolerance."""


class SizeOne(RenormError):
    """Requested break sizes contain 1."""


class DiscontinuousAtBreak(RenormError):
    """Adjacent branch values disagree at a break point."""


class RationalSuspected(RenormError):
    """Induction terminated; the rotation number looks rational."""


class NotDisjoint(RenormError):
    """Orbit intervals overlap or contain a break point."""


class SingularityCollision(RenormError):
    """The two rightmost singularities coincide; induction undefined."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class NonTerminating(RenormError):
    """Step budget exhausted while grouping elementary induction steps."""


class NotCircular(RenormError):
    """Operation requires a circular marked permutation."""


class DegenerateTriple(RenormError):
    """Three-point Moebius interpolation with non-monotone image data."""


class NonHyperbolicLoop(RenormError):
    """Distinguished loop image is not hyperbolic."""


class NormalisationAmbiguity(RenormError):
    """No canonical conjugator for the attracting-family normal form."""


class NotOnSlice(RenormError):
    """Point does not satisfy the slice constraints."""


class NoRealFixedPoint(RenormError):
    """A designated word image is elliptic; no break point to recover."""


class OrderViolation(RenormError):
    """Recovered singularities are not strictly increasing."""


class InadmissibleMove(RenormError):
    """Rauzy move not admissible at the given permutation."""


class SpecInvalid(RenormError):
    """Experiment specification failed validation."""


class PrecisionFloor(RenormError):
    """Interval lengths dropped below the floating-point resolution floor."""
