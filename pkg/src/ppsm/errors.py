"""Exception types shared across the package."""


class PPSMError(Exception):
    """Base class for all toolkit errors."""


class OrthogonalSelection(PPSMError):
    """Pre- and post-selected states are numerically orthogonal; the weak value is undefined."""


class ZeroPostSelection(PPSMError):
    """Post-selection probability is below the numerical floor; conditional quantities are undefined."""


class RegimeViolation(PPSMError):
    """An approximation was evaluated outside its validity region."""


class DegeneratePointer(PPSMError):
    """The pointer configuration cannot support the requested operation (e.g. a centered pointer where an offset is required)."""


class EmptyRegion(PPSMError):
    """The requested operating-region inequalities have no bounded solution."""


class NoConvergence(PPSMError):
    """Adaptive quadrature exhausted its node budget before reaching tolerance."""


class FlatFunction(PPSMError):
    """A scalar search found no usable variation over the interval."""


class BoundaryMaximum(PPSMError):
    """A maximizer landed on the search-interval edge, so the result is unreliable."""


class ZeroDensity(PPSMError):
    """A recorded readout falls where the candidate model assigns numerically zero density."""


class HierarchyViolation(PPSMError):
    """Computed information quantities violate cfi <= F_d <= max joint QFI beyond tolerance."""


class RegionMiss(PPSMError):
    """Adaptive protocol: the verified residual is inconsistent with the modulated operating region."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class ParseError(PPSMError):
    """A scenario file or value could not be parsed."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class ValidationError(PPSMError):
    """A parsed configuration violates a documented invariant."""
