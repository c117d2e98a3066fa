"""Recovering sine coefficients from samples at one point.

With ``c_k = f_k sin(k x0)`` the samples are ``u(x0, t_i) = sum_k c_k
exp(lambda(k) t_i)``.  The recursion peels modes off one at a time: mode
``k`` is read from sample ``n - k + 1``, after removing the faster-decaying
modes ``j < k`` that were already recovered from later samples.

Alongside each ``c_bar[k]`` the recursion carries a certified budget that
covers the sample errors and every rounding step.  It says nothing about
modelling error (modes the recursion ignores); that is what the a-priori
bounds are for.
"""

import json
from dataclasses import dataclass, field
from typing import NamedTuple

from mpmath import iv, mp, mpf

from .errors import IllConditioned, PrecisionInsufficient, RhoBelowThreshold
from .initial_data import InitialDatum, l2_distance
from .operator_spectrum import HEAT, exp_lambda_row, rho_threshold
from .precision import (
    DEFAULT_GUARD_BITS,
    iv_precision,
    mpf_to_str,
    to_fraction,
    to_iv,
    to_mpf,
)

A0_BITS = 128


class A0Value(NamedTuple):
    value: mpf
    error: mpf
    terms: int

    @property
    def upper(self):
        with mp.workprec(A0_BITS):
            return (self.value + self.error) * (1 + mpf(2) ** -100)


def a0_series(spec, t1, tol):
    """``A0(t1) = sum_{j>=2} exp(-(lambda(2) - lambda(j)) t1)`` with its error bound.

    Terms are added until the next one is below ``tol * partial * 1e-2`` and
    the geometric tail bound ``a_{J+1} / (1 - exp(-delta_{J+1} t1))`` (gaps
    never shrink) is at most ``tol``.  The returned error is that tail plus
    rounding.
    """
    with mp.workprec(A0_BITS):
        t1, tol = mpf(t1), mpf(tol)
        if t1 <= 0:
            raise ValueError("t1 must be positive")
        if tol <= 0:
            raise ValueError("tol must be positive")
        lam2 = spec.lam(2)
        total = mpf(0)
        j = 2
        while True:
            total += mp.exp(-to_mpf(lam2 - spec.lam(j)) * t1)
            nxt = mp.exp(-to_mpf(lam2 - spec.lam(j + 1)) * t1)
            tail = nxt / (1 - mp.exp(-to_mpf(spec.gap(j + 1)) * t1))
            if nxt < tol * total / 100 and tail <= tol:
                break
            j += 1
        rounding = total * (j + 4) * mpf(2) ** (4 - A0_BITS)
        return A0Value(total, tail + rounding, j - 1)


def a0_constant(spec, t1, tol=mpf(10) ** -20):
    """Value of :func:`a0_series` alone (error at most ``tol`` plus rounding)."""
    return a0_series(spec, t1, tol).value


def _times_of(trace):
    return list(trace.effective_times or trace.times)


def required_bits(spec, times, guard=DEFAULT_GUARD_BITS):
    """Gate: ``max_k |lambda(k)| t_{n-k+1} / ln 2 + guard``."""
    n = len(times)
    with mp.workprec(64):
        worst = max(abs(to_mpf(spec.lam(k))) * mpf(times[n - k]) for k in range(1, n + 1))
        return int(mp.ceil(worst / mp.ln2)) + guard


def working_bits(spec, times, guard=DEFAULT_GUARD_BITS):
    """Precision that resolves every coefficient error down to its a-priori bound.

    The error in ``c_bar[k]`` is of size ``exp(-delta_k t)``, found by
    cancelling terms of size about ``exp((lambda(1) - lambda(k)) t)``, so the
    mantissa has to span ``|lambda(k+1)| t`` plus guard bits; the last term
    pays for rounding in the exponentials of the largest arguments.
    """
    n = len(times)
    with mp.workprec(64):
        spans = [abs(to_mpf(spec.lam(k + 1))) * mpf(times[n - k]) for k in range(1, n + 1)]
        worst = max(spans)
        extra = int(mp.ceil(mp.log(1 + worst, 2)))
        bits = int(mp.ceil(worst / mp.ln2)) + guard + extra + 16
    return max(bits, required_bits(spec, times, guard))


def sample_tolerances(spec, times, guard=DEFAULT_GUARD_BITS):
    """Per-sample tolerances ``exp(lambda(k+1) t_i) 2^-guard`` with ``k = n - i + 1``.

    Sample ``i`` is only used to read mode ``k``, whose a-priori bound has
    the size ``exp(lambda(k+1) t_i)`` after amplification, so a tolerance
    below that scale by ``2^-guard`` never dominates the comparison.
    """
    n = len(times)
    out = []
    with mp.workprec(64):
        for i in range(1, n + 1):
            k = n - i + 1
            out.append(mp.exp(to_mpf(spec.lam(k + 1)) * mpf(times[i - 1])) * mpf(2) ** -guard)
    return out


class Recursion(NamedTuple):
    c_bar: list
    budgets: list
    bits: int


def recover_with_budget(trace, spec, *, times=None, mantissa_bits=None):
    """Run the recursion and return ``c_bar`` with certified per-coefficient budgets.

    ``budget[k]`` bounds ``|c_bar[k] - c_exact[k]|`` where ``c_exact`` is the
    same recursion run in exact arithmetic on exact samples.
    """
    ts = list(times) if times is not None else _times_of(trace)
    n = len(ts)
    if n < 1 or n > len(trace):
        raise ValueError("need 1 <= n <= number of samples")
    need = required_bits(spec, ts)
    have = int(mantissa_bits if mantissa_bits is not None else trace.mantissa_bits)
    if have < need:
        raise PrecisionInsufficient(have, need)
    c_bar, budgets = [], []
    for k in range(1, n + 1):
        i = n - k  # sample n - k + 1, zero-based
        with mp.workprec(have):
            t = +ts[i]
            row = exp_lambda_row(spec, t, k)
            inv = 1 / row[k - 1]
            head = (+trace.samples[i]) * inv
            terms = [c_bar[j] * (row[j] * inv) for j in range(k - 1)]
            value = head - mp.fsum(terms)
        c_bar.append(value)
        with mp.workprec(64):
            ainv = abs(inv)
            carried = mp.fsum(budgets[j] * abs(row[j]) * ainv for j in range(k - 1))
            scale = abs(head) + mp.fsum(abs(v) for v in terms)
            rounding = (k + 8) * mpf(2) ** (2 - have) * scale
            budget = (mpf(trace.errors[i]) * ainv + carried + rounding) * (1 + mpf(2) ** -40)
        budgets.append(budget)
    return Recursion(c_bar, budgets, have)


def recover_coefficients(trace, spec, *, times=None, mantissa_bits=None):
    """``c_bar[k-1]`` for ``k = 1..n``; raises :class:`PrecisionInsufficient` early."""
    return recover_with_budget(trace, spec, times=times, mantissa_bits=mantissa_bits).c_bar


def sin_multiples(x0, kmax, bits):
    """``[sin(k x0) for k in 1..kmax]`` from one sine/cosine pair.

    The three-term recurrence ``s_{k+1} = 2 cos(x0) s_k - s_{k-1}`` loses at
    most ``O(k^2)`` ulps, which the guard bits absorb.
    """
    guard = 2 * (kmax + 1).bit_length() + 24
    out = []
    with mp.workprec(bits + guard):
        x0 = +x0
        two_cos = 2 * mp.cos(x0)
        prev, cur = mpf(0), mp.sin(x0)
        for _ in range(kmax):
            out.append(cur)
            prev, cur = cur, two_cos * cur - prev
    with mp.workprec(bits):
        return [+v for v in out]


def reconstruct(c_bar, plan, bits=None):
    """``f_n`` with ``f_bar[k] = c_bar[k] / sin(k x0)`` for ``k <= ceil(n/2)``."""
    m = (len(c_bar) + 1) // 2
    bits = bits or max([A0_BITS] + [mpf(c)._mpf_[3] for c in c_bar])
    coeffs = []
    sines = sin_multiples(plan.x0, m, bits)
    with mp.workprec(bits):
        for k in range(1, m + 1):
            coeffs.append(c_bar[k - 1] / sines[k - 1])
    return InitialDatum(tuple(coeffs))


def _min_ratio(times):
    with mp.workprec(64):
        return min((mpf(b) / mpf(a) for a, b in zip(times, times[1:])), default=mpf("inf"))


def apriori_error_bounds(spec, plan, a0=None, *, a0_tol=mpf(10) ** -20):
    """``A0(t1) 2^k exp(-delta_k t_{n-k+1})`` for ``k = 1..n``.

    Rescaled plans use the heat spectrum at certified lower values of
    ``b(t_j)``, which is the form ``A0 2^k exp(-(2k+1) b(t_{n-k+1}))``.
    """
    rescaled = plan.mode == "rescaled"
    spec = HEAT if rescaled else spec
    times = plan.effective_times_lower(256) if rescaled else list(plan.times)
    with mp.workprec(64):
        threshold = rho_threshold(spec)
        ratio = mpf(plan.rho) if plan.mode != "explicit" else _min_ratio(times)
        if plan.n > 1 and not ratio > threshold:
            raise RhoBelowThreshold(float(ratio), float(threshold))
    if a0 is None:
        a0 = a0_series(spec, times[0], a0_tol)
    a0_up = a0.upper if isinstance(a0, A0Value) else mpf(a0)
    n = len(times)
    out = []
    with mp.workprec(64):
        for k in range(1, n + 1):
            gap = to_mpf(spec.gap(k))
            out.append(a0_up * mpf(2) ** k * mp.exp(-gap * mpf(times[n - k])) * (1 + mpf(2) ** -40))
    return out


class OneSample(NamedTuple):
    c1: mpf
    c2: mpf
    bound1: mpf
    bound2: mpf


def one_sample_two_coeffs(u1, t1, x0=None, r=2, bits=A0_BITS):
    """Two heat coefficients from a single sample ``u1 = u(x0, t1)``.

    ``c1 = e^{t1} u1`` and ``c2 = e^{4 t1} u1 - c1 e^{3 t1}``, with the bounds
    ``1 / (2^r e^{3 t1} (1 - e^{-t1}))`` and ``(1 + e^{-5 t1}) / (2^r (1 - e^{-t1}))``.
    ``x0`` is not needed for the estimates and is accepted for symmetry.
    """
    with mp.workprec(bits):
        t1, u1 = mpf(t1), mpf(u1)
        if t1 <= 0:
            raise ValueError("t1 must be positive")
        r = to_mpf(to_fraction(r))
        c1 = mp.exp(t1) * u1
        c2 = mp.exp(4 * t1) * u1 - c1 * mp.exp(3 * t1)
        denom = mpf(2) ** r * (1 - mp.exp(-t1))
        b1 = 1 / (denom * mp.exp(3 * t1))
        b2 = (1 + mp.exp(-5 * t1)) / denom
    return OneSample(c1, c2, b1, b2)


class OracleSolution(NamedTuple):
    values: list
    radii: list
    bits: int


def _mig(x):
    a, b = (mp.make_mpf(e) for e in x._mpi_)
    if a <= 0 <= b:
        return mpf(0)
    return min(abs(a), abs(b))


def _approximate_inverse(M, n, bits):
    # point Gauss-Jordan with partial pivoting; only used as a preconditioner
    with mp.workprec(bits):
        A = [row[:] + [mpf(int(i == j)) for j in range(n)] for i, row in enumerate(M)]
        for s in range(n):
            p = max(range(s, n), key=lambda i: abs(A[i][s]))
            if A[p][s] == 0:
                raise IllConditioned("sample matrix is numerically singular; raise precision")
            A[s], A[p] = A[p], A[s]
            piv = A[s][s]
            A[s] = [v / piv for v in A[s]]
            for i in range(n):
                if i != s and A[i][s]:
                    factor = A[i][s]
                    A[i] = [a - factor * b for a, b in zip(A[i], A[s])]
        return [row[n:] for row in A]


def _interval_solve(A, rhs, n):
    cols = list(range(n))
    for s in range(n):
        best, bi, bj = mpf(-1), s, s
        for i in range(s, n):
            for j in range(s, n):
                g = _mig(A[i][j])
                if g > best:
                    best, bi, bj = g, i, j
        if best <= 0:
            raise IllConditioned(f"pivot interval contains zero at step {s + 1}; raise precision")
        A[s], A[bi] = A[bi], A[s]
        rhs[s], rhs[bi] = rhs[bi], rhs[s]
        for row in A:
            row[s], row[bj] = row[bj], row[s]
        cols[s], cols[bj] = cols[bj], cols[s]
        for i in range(s + 1, n):
            factor = A[i][s] / A[s][s]
            for j in range(s + 1, n):
                A[i][j] = A[i][j] - factor * A[s][j]
            rhs[i] = rhs[i] - factor * rhs[s]
    sol = [None] * n
    for s in range(n - 1, -1, -1):
        acc = rhs[s]
        for j in range(s + 1, n):
            acc = acc - A[s][j] * sol[j]
        sol[s] = acc / A[s][s]
    out = [None] * n
    for s in range(n):
        out[cols[s]] = sol[s]
    return out


def oracle_recover(trace, spec, n=None, *, times=None, bits=None):
    """Solve ``sum_j c_j exp(lambda(j) t_i) = u_i`` (``i, j <= n``) in interval arithmetic.

    The system is preconditioned with a high-precision approximate inverse
    ``R`` and ``(R M) c = R u`` is solved by Gaussian elimination with full
    pivoting.  The data enter as ``[u_i - err_i, u_i + err_i]``, so the
    returned radii cover sample errors and rounding.  A pivot interval that
    contains zero raises :class:`IllConditioned`.
    """
    ts = list(times) if times is not None else _times_of(trace)
    n = len(ts) if n is None else n
    if not 1 <= n <= min(len(ts), len(trace)):
        raise ValueError("need 1 <= n <= number of samples")
    ts = ts[:n]
    if bits is None:
        bits = working_bits(spec, ts) + 32 * n + 64
    with mp.workprec(bits):
        rows = [exp_lambda_row(spec, +ts[i], n) for i in range(n)]
    R = _approximate_inverse(rows, n, bits)
    with iv_precision(bits):
        M = [[iv.exp(to_iv(spec.lam(j)) * to_iv(ts[i])) for j in range(1, n + 1)] for i in range(n)]
        data = []
        for i in range(n):
            u, e = trace.samples[i], trace.errors[i]
            data.append(to_iv(u) + iv.mpf([-mpf(e), mpf(e)]))
        Ri = [[to_iv(v) for v in row] for row in R]
        RM = [[sum((Ri[i][l] * M[l][j] for l in range(n)), iv.mpf(0)) for j in range(n)]
              for i in range(n)]
        Ru = [sum((Ri[i][l] * data[l] for l in range(n)), iv.mpf(0)) for i in range(n)]
        sol = _interval_solve(RM, Ru, n)
        values, radii = [], []
        for x in sol:
            lo, hi = (mp.make_mpf(e) for e in x._mpi_)
            with mp.workprec(bits):
                mid = (lo + hi) / 2
            with mp.workprec(bits + 16):
                rad = max(hi - mid, mid - lo)
            with mp.workprec(64):
                radii.append(rad * (1 + mpf(2) ** -40))
            values.append(mid)
    return OracleSolution(values, radii, bits)


def true_coefficients(f, x0, n, bits):
    """``c_k = f_k sin(k x0)`` for ``k = 1..n`` at ``bits`` of precision."""
    sines = sin_multiples(x0, n, bits)
    with mp.workprec(bits):
        return [f.coeff(k) * sines[k - 1] for k in range(1, n + 1)]


@dataclass
class RecoveryResult:
    """Everything one recovery produces, with the bound ledger for auditing."""

    c_bar: list
    f_bar: list
    m: int
    apriori_bounds: list
    mantissa_bits: int
    budgets: list
    a0: A0Value
    l2_error: mpf = None
    l2_budget: mpf = None
    coefficient_errors: list = field(default_factory=list)

    @property
    def n(self):
        return len(self.c_bar)

    @property
    def violations(self):
        """``|c_k - c_bar_k| - bound_k`` for each ``k`` (needs the truth)."""
        with mp.workprec(64):
            return [e - b for e, b in zip(self.coefficient_errors, self.apriori_bounds)]

    @property
    def max_violation(self):
        v = self.violations
        return max(v) if v else None

    @property
    def sound(self):
        """No coefficient error exceeds its bound plus its arithmetic budget."""
        return all(e <= b + g for e, b, g in zip(self.coefficient_errors, self.apriori_bounds, self.budgets))

    def to_dict(self):
        s = mpf_to_str
        out = {
            "n": self.n, "m": self.m, "mantissa_bits": self.mantissa_bits,
            "a0": {"value": s(self.a0.value), "error": s(self.a0.error), "terms": self.a0.terms},
            "c_bar": [s(c) for c in self.c_bar],
            "f_bar": [s(c) for c in self.f_bar],
            "budgets": [s(b) for b in self.budgets],
            "apriori_bounds": [s(b) for b in self.apriori_bounds],
        }
        if self.coefficient_errors:
            out["coefficient_errors"] = [s(e) for e in self.coefficient_errors]
            out["violations"] = [s(v) for v in self.violations]
            out["sound"] = self.sound
        if self.l2_error is not None:
            out["l2_error"] = s(self.l2_error)
            out["l2_budget"] = s(self.l2_budget)
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def l2_budget(budgets, x0, m):
    """``sqrt(pi/2 sum_{k<=m} (budget_k / |sin k x0|)^2)``: arithmetic share of the L2 error."""
    with mp.workprec(64):
        total = mp.fsum((budgets[k - 1] / abs(mp.sin(k * mpf(x0)))) ** 2 for k in range(1, m + 1))
        return mp.sqrt(mp.pi / 2 * total) * (1 + mpf(2) ** -30)


def recover(trace, spec, plan, *, truth=None, mantissa_bits=None, a0_tol=mpf(10) ** -20):
    """Recursion, reconstruction and bounds for one trace; compares against ``truth`` if given."""
    rescaled = plan.mode == "rescaled"
    spec = HEAT if rescaled else spec
    times = _times_of(trace)
    bits = mantissa_bits if mantissa_bits is not None else working_bits(spec, times)
    rec = recover_with_budget(trace, spec, times=times, mantissa_bits=bits)
    lower = plan.effective_times_lower(256) if rescaled else list(plan.times)
    a0 = a0_series(spec, lower[0], a0_tol)
    bounds = apriori_error_bounds(spec, plan, a0)
    f_n = reconstruct(rec.c_bar, plan, bits)
    m = f_n.support
    result = RecoveryResult(rec.c_bar, list(f_n.coeffs), m, bounds, bits, rec.budgets, a0)
    if truth is not None:
        exact = true_coefficients(truth, plan.x0, len(rec.c_bar), bits)
        with mp.workprec(bits):
            diffs = [abs(a - b) for a, b in zip(exact, rec.c_bar)]
        with mp.workprec(64):
            result.coefficient_errors = [+d for d in diffs]
        result.l2_error = l2_distance(truth, f_n, bits)
        result.l2_budget = l2_budget(rec.budgets, plan.x0, m)
    return result


__all__ = [
    "A0Value", "OneSample", "OracleSolution", "Recursion", "RecoveryResult",
    "a0_constant", "a0_series", "apriori_error_bounds", "l2_budget",
    "one_sample_two_coeffs", "oracle_recover", "reconstruct", "recover",
    "recover_coefficients", "recover_with_budget", "required_bits", "sample_tolerances", "sin_multiples",
    "true_coefficients", "working_bits",
]
