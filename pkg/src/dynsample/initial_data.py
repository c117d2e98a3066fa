"""Initial data as finite Fourier sine expansions on (0, pi)."""

import json
from dataclasses import dataclass

import numpy as np
from mpmath import mp, mpf

from .precision import mpf_from_str, mpf_to_str, to_fraction, to_mpf

DATA_BITS = 128


@dataclass(frozen=True)
class InitialDatum:
    """``f(x) = sum_k coeffs[k-1] * sin(k x)`` with finitely many modes.

    ``smoothness_r`` is the Sobolev-type index used by :func:`ball_norm`;
    ``declared_ball`` asserts ``sum k^{2r} f_k^2 <= 1`` and is checked.
    """

    coeffs: tuple
    smoothness_r: float = None
    declared_ball: bool = False

    def __post_init__(self):
        coeffs = tuple(c if isinstance(c, mpf) else _as_mpf(c) for c in self.coeffs)
        object.__setattr__(self, "coeffs", coeffs)
        if self.declared_ball:
            if self.smoothness_r is None:
                raise ValueError("ball membership needs a smoothness index r")
            if ball_norm(self) > 1:
                raise ValueError("declared_ball set but sum k^{2r} f_k^2 exceeds 1")

    @property
    def support(self):
        return len(self.coeffs)

    def coeff(self, k):
        return self.coeffs[k - 1] if 1 <= k <= len(self.coeffs) else mpf(0)

    def abs_sum(self, start=1):
        """``sum_{k >= start} |f_k|`` (exact data, rounded at 64 bits upward-safe)."""
        with mp.workprec(64):
            return sum((abs(c) for c in self.coeffs[start - 1:]), mpf(0)) * (1 + mpf(2) ** -50)

    def to_json(self):
        return json.dumps({
            "r": None if self.smoothness_r is None else float(self.smoothness_r),
            "coeffs": [mpf_to_str(c) for c in self.coeffs],
        })

    @classmethod
    def from_json(cls, text, declared_ball=False):
        data = json.loads(text)
        unknown = set(data) - {"r", "coeffs"}
        if unknown:
            raise ValueError(f"unknown keys in datum JSON: {sorted(unknown)}")
        return cls(tuple(data["coeffs"]), data.get("r"), declared_ball)


def _as_mpf(value):
    # strings go through the exact decimal reader; numbers are converted exactly
    if isinstance(value, str):
        return mpf_from_str(value)
    with mp.workprec(max(DATA_BITS, 64)):
        return to_mpf(to_fraction(value))


def _weight(k, r, bits):
    with mp.workprec(bits):
        return mpf(k) ** (2 * to_mpf(to_fraction(r)))


def ball_norm(f, bits=DATA_BITS):
    """``sqrt(sum k^{2r} f_k^2)``; ``f`` lies in the unit ball iff this is <= 1."""
    if f.smoothness_r is None:
        raise ValueError("ball_norm needs the smoothness index r")
    with mp.workprec(bits + 16):
        total = mpf(0)
        for k, c in enumerate(f.coeffs, start=1):
            if c:
                total += _weight(k, f.smoothness_r, bits + 16) * c * c
        result = mp.sqrt(total)
    with mp.workprec(bits):
        return +result


def l2_distance(f, g, bits=DATA_BITS):
    """L2(0, pi) distance via Parseval: ``sqrt(pi/2 * sum (f_k - g_k)^2)``."""
    n = max(f.support, g.support)
    with mp.workprec(bits + 16):
        total = mpf(0)
        for k in range(1, n + 1):
            d = f.coeff(k) - g.coeff(k)
            total += d * d
        result = mp.sqrt(mp.pi / 2 * total)
    with mp.workprec(bits):
        return +result


def random_ball_member(r, K, margin, seed):
    """Seeded datum on modes ``1..K`` with ``ball_norm == margin``.

    Raw coefficients are ``sign * U(0.5, 1.5) * k^{-(r+1)}``, then rescaled.
    """
    if K < 1:
        raise ValueError("K must be positive")
    if not 0 < margin < 1:
        raise ValueError("margin must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    signs = rng.choice((-1.0, 1.0), size=K)
    mags = rng.uniform(0.5, 1.5, size=K)
    ks = np.arange(1, K + 1, dtype=float)
    raw = signs * mags * ks ** (-(float(r) + 1.0))
    draft = InitialDatum(tuple(float(v) for v in raw), r)
    with mp.workprec(DATA_BITS + 32):
        scale = to_mpf(to_fraction(margin)) / ball_norm(draft, DATA_BITS + 32)
        coeffs = tuple(c * scale for c in draft.coeffs)
    with mp.workprec(DATA_BITS):
        coeffs = tuple(+c for c in coeffs)
    return InitialDatum(coeffs, r, declared_ball=True)


def truncation_tail_bound(r, n):
    """``n^{-r}``: bound on the sine-tail beyond mode ``n`` for data in the unit ball."""
    return float(n) ** (-float(r))
