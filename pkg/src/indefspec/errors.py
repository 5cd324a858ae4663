"""Exception types shared across the package."""


class IndefSpecError(Exception):
    """Base class for all library errors."""


class SpecError(IndefSpecError):
    """Input specification is malformed or violates an invariant."""


class NonConvergentTail(IndefSpecError):
    """A rule-generated atom family cannot bound its tail for the request."""


class OnSupport(IndefSpecError):
    """A real evaluation point lies on the support of the measure."""


class HypothesesFail(IndefSpecError):
    """Boundary limit requested where equal masses or finite moments fail."""


class NoLimit(IndefSpecError):
    """A numerically extrapolated limit did not stabilise."""


class NotInDomain(IndefSpecError):
    """A chain vector is not in the domain of the adjoint operator."""


class NotWellPosed(IndefSpecError):
    """Boundary value is not unique (finite total mass)."""


class DivergentMoment(IndefSpecError):
    """A moment needed by a boundary map diverges."""


class Degenerate(IndefSpecError):
    """Both halves carry identical data, so the spectrum is the whole plane."""


class RegionTouchesEssential(IndefSpecError):
    """A search region or point meets the essential spectrum."""


class AtXi(IndefSpecError):
    """Zone functions requested exactly at an open-gap divisor point."""


class SummabilityUncertified(IndefSpecError):
    """Gap data lacks the tail information needed for a truncation bound."""


class BranchAmbiguity(IndefSpecError):
    """The two closed forms of a zone m-coefficient disagree."""


class OutsideBand(IndefSpecError):
    """Band density requested outside the open bands."""


class InnerDivergent(IndefSpecError):
    """The inner tail integral of the weight does not converge."""


class DiskTooLarge(IndefSpecError):
    """Weyl disk radius stayed above tolerance at the largest radius."""


class NumericFailure(IndefSpecError):
    """Generic numerical failure (solver, quadrature)."""
