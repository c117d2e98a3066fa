"""Constant-coefficient spatial operators of order 2N on (0, pi) with Dirichlet
boundary conditions, their sine-mode spectrum and the integer inequalities
behind the geometric sampling ratio.

The operator ``L = sum_l alpha_{2l} d^{2l}/dx^{2l}`` acts on ``sin(kx)`` with
eigenvalue ``lambda(k) = sum_l (-1)^l alpha_{2l} k^{2l}``.  Coefficients are
kept as exact rationals so eigenvalues and gaps are exact.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

from mpmath import mp, mpf

from .errors import EmptyCoefficients, SignPatternViolation
from .precision import to_fraction, to_mpf


@dataclass(frozen=True)
class OperatorSpec:
    """Coefficients ``alpha_{2l}`` for ``l = 1..N`` in increasing order."""

    coeffs: tuple

    def __post_init__(self):
        coeffs = tuple(to_fraction(c) for c in self.coeffs)
        if not coeffs:
            raise EmptyCoefficients("an operator needs at least one coefficient")
        for l, a in enumerate(coeffs, start=1):
            # alpha_{2l} > 0 for odd l, < 0 for even l; zero is rejected too
            if a == 0 or (a > 0) != (l % 2 == 1):
                raise SignPatternViolation(l, a)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def order_half(self):
        return len(self.coeffs)

    @property
    def betas(self):
        """``(-1)^l alpha_{2l}``; all strictly negative for admissible specs."""
        return tuple(a if l % 2 == 0 else -a for l, a in enumerate(self.coeffs, start=1))

    def lam(self, k):
        """Exact eigenvalue on mode ``k`` as a Fraction."""
        k2 = k * k
        total = Fraction(0)
        power = 1
        for beta in self.betas:
            power *= k2
            total += beta * power
        return total

    def gap(self, k):
        return self.lam(k) - self.lam(k + 1)


HEAT = OperatorSpec((1,))


def validate_coefficients(coeffs):
    """Build an :class:`OperatorSpec`, raising on an empty list or bad signs."""
    return OperatorSpec(tuple(coeffs))


def lambda_of(spec, k, prec=None):
    """Eigenvalue on mode ``k``: exact Fraction, or mpf rounded to ``prec`` bits."""
    if k < 1:
        raise ValueError("modes are indexed from k = 1")
    value = spec.lam(k)
    if prec is None:
        return value
    with mp.workprec(prec):
        return to_mpf(value)


class SpectralGap(NamedTuple):
    k: int
    delta_k: Fraction


def spectral_gap(spec, k):
    if k < 1:
        raise ValueError("modes are indexed from k = 1")
    return SpectralGap(k, spec.gap(k))


def min_gap(spec, m):
    """Smallest gap among ``delta_1..delta_m``."""
    if m < 1:
        raise ValueError("m must be positive")
    return min(spec.gap(k) for k in range(1, m + 1))


def rho_threshold(spec_or_n):
    """``2N ln 2``; depends on the order only, never on coefficient values."""
    n_half = spec_or_n if isinstance(spec_or_n, int) else spec_or_n.order_half
    return 2 * n_half * mp.ln2


def stable_rho(spec_or_n):
    """Smallest ratio for which the coefficient-recursion error bound closes.

    The bound needs ``rho**(k-j) >= ((k+1)^{2N} - j^{2N}) / ((j+1)^{2N} - j^{2N})``
    for all ``1 <= j < k``; the worst pair is ``(k, j) = (2, 1)``, which gives
    ``(3^{2N} - 1) / (2^{2N} - 1)`` (8/3 for the heat equation).
    """
    n_half = spec_or_n if isinstance(spec_or_n, int) else spec_or_n.order_half
    return Fraction(3 ** (2 * n_half) - 1, 2 ** (2 * n_half) - 1)


def exp_lambda_row(spec, t, kmax):
    """``[exp(lambda(k) * t) for k in 1..kmax]`` at the current precision.

    Uses a forward-difference table of the degree-2N polynomial ``lambda``.
    The table heads are integer multiples of ``1/q`` (``q`` the common
    denominator), so one exponential ``exp(t/q)`` and integer powers give
    every head; the remaining values are products.  Relative error stays
    within a few units in the last place.
    """
    if kmax < 1:
        return []
    degree = 2 * spec.order_half
    values = [spec.lam(k) for k in range(1, degree + 2)]
    heads = []
    for _ in range(degree + 1):
        heads.append(values[0])
        values = [b - a for a, b in zip(values, values[1:])]
    q = math.lcm(*(h.denominator for h in heads))
    ints = [int(h * q) for h in heads]
    with mp.workprec(64):
        span = abs(mpf(t)) * max(abs(a) for a in ints) / q + max(abs(a) for a in ints) + 2
        span_bits = int(mp.ceil(mp.log(span, 2)))
    guard = degree * (kmax + degree).bit_length() + span_bits + 24
    out = []
    with mp.extraprec(guard):
        unit = mp.exp(mpf(t) / q)
        level = [unit ** a for a in ints]
        for _ in range(kmax):
            out.append(level[0])
            for d in range(degree):
                level[d] = level[d] * level[d + 1]
    return [+v for v in out]


class GBoundReport(NamedTuple):
    order_half: int
    x_max: int
    max_value: float
    argmax: tuple
    threshold: float
    passed: bool


def g_value(n_half, x, y):
    """``ln(((x+1)^{2N} - y^{2N}) / ((y+1)^{2N} - y^{2N})) / (x - y)`` from exact integers."""
    p = 2 * n_half
    num = (x + 1) ** p - y ** p
    den = (y + 1) ** p - y ** p
    return (math.log(num) - math.log(den)) / (x - y)


def check_g_bound(n_half, x_max, threshold=None):
    """Scan ``g`` over ``2 <= x <= x_max, 1 <= y <= x - 1`` against ``2N ln 2``.

    ``threshold`` overrides the comparison value (used for negative controls).
    Passing requires the maximum to stay strictly below the threshold.
    """
    if x_max < 2:
        raise ValueError("x_max must be at least 2")
    p = 2 * n_half
    best, arg = -math.inf, None
    powers = [i ** p for i in range(x_max + 2)]
    for y in range(1, x_max):
        log_den = math.log(powers[y + 1] - powers[y])
        for x in range(y + 1, x_max + 1):
            val = (math.log(powers[x + 1] - powers[y]) - log_den) / (x - y)
            if val > best:
                best, arg = val, (x, y)
    limit = float(2 * n_half * math.log(2)) if threshold is None else float(threshold)
    return GBoundReport(n_half, x_max, best, arg, limit, best < limit)


class PowerInequalityReport(NamedTuple):
    k_max: int
    l_max: int
    checked: int
    passed: bool
    counterexample: object


def check_power_inequalities(k_max, l_max):
    """Exhaustive integer check of the two power inequalities.

    (i)  ``b^l - a^l > b^j - a^j`` for ``1 <= a < b <= k_max``, ``l > j >= 1``;
    (ii) ``((k+1)^l - j^l) / ((j+1)^l - j^l) >= ((k+1)^m - j^m) / ((j+1)^m - j^m)``
         for ``l >= m + 1``, ``1 <= j <= k - 1``, ``k <= k_max``.
    """
    if k_max < 3 or l_max < 2:
        raise ValueError("need k_max >= 3 and l_max >= 2")
    checked = 0
    for b in range(2, k_max + 1):
        for a in range(1, b):
            diffs = [b ** e - a ** e for e in range(l_max + 1)]
            for l in range(2, l_max + 1):
                for j in range(1, l):
                    checked += 1
                    if not diffs[l] > diffs[j]:
                        return PowerInequalityReport(k_max, l_max, checked, False, ("i", a, b, l, j))
    for k in range(2, k_max + 1):
        for j in range(1, k):
            num = [(k + 1) ** e - j ** e for e in range(l_max + 1)]
            den = [(j + 1) ** e - j ** e for e in range(l_max + 1)]
            for l in range(2, l_max + 1):
                for m in range(1, l):
                    checked += 1
                    # cross-multiplied; all denominators are positive
                    if num[l] * den[m] < num[m] * den[l] or num[m] <= 0:
                        return PowerInequalityReport(k_max, l_max, checked, False, ("ii", k, j, l, m))
    return PowerInequalityReport(k_max, l_max, checked, True, None)
