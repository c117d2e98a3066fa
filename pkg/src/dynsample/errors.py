"""Exception types raised across the package."""


class DynSampleError(Exception):
    """Base class for all package errors."""


class EmptyCoefficients(DynSampleError, ValueError):
    pass


class SignPatternViolation(DynSampleError, ValueError):
    """A coefficient breaks the alternating sign rule (index ``l`` is 1-based)."""

    def __init__(self, l, value=None):
        self.l = l
        self.value = value
        super().__init__(f"coefficient alpha_{2 * l} = {value} violates the sign pattern at l={l}")


class RhoBelowThreshold(DynSampleError, ValueError):
    def __init__(self, rho, threshold):
        self.rho = rho
        self.threshold = threshold
        super().__init__(f"rho={rho} does not exceed the threshold {threshold}")


class ResonantPoint(DynSampleError, ValueError):
    """``k * x0`` sits on a multiple of pi, so mode ``k`` is invisible at ``x0``."""

    def __init__(self, k):
        self.k = k
        super().__init__(f"sampling point is resonant: sin({k} * x0) = 0")


class TolUnachievable(DynSampleError, ArithmeticError):
    pass


class PrecisionInsufficient(DynSampleError, ArithmeticError):
    def __init__(self, have, need):
        self.have = have
        self.need = need
        super().__init__(f"working precision {have} bits < required {need} bits")


class IllConditioned(DynSampleError, ArithmeticError):
    pass


class RootBracketFailure(DynSampleError, ArithmeticError):
    pass


class InvalidProfile(DynSampleError, ValueError):
    pass


class ConfigError(DynSampleError, ValueError):
    pass
