"""Series solution of the forward problem with certified error.

Autonomous case: ``u(x, t) = sum_k f_k exp(lambda(k) t) sin(kx)``.
Non-autonomous heat case ``u_t = alpha(t) u_xx``: the same series with
``lambda(k) t`` replaced by ``-k^2 b(t)``, ``b(t) = int_0^t alpha``.

Every value comes back with an absolute error bound covering the dropped
modes and all rounding (terms are summed in interval arithmetic).
"""

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from mpmath import iv, mp, mpf

from .errors import InvalidProfile, TolUnachievable
from .operator_spectrum import HEAT, OperatorSpec
from .precision import (
    DEFAULT_CEILING_BITS,
    iv_precision,
    mpf_from_str,
    mpf_to_str,
    to_fraction,
    to_iv,
    to_mpf,
)

PROFILE_KINDS = ("constant", "affine", "sinusoidal", "tabulated")


class SeriesValue(NamedTuple):
    value: mpf
    error: mpf
    bits: int


@dataclass(frozen=True)
class DiffusivityProfile:
    """Time-dependent diffusivity ``alpha(t) >= m > 0``.

    kinds: ``constant`` (alpha = a), ``affine`` (a + b t, b >= 0),
    ``sinusoidal`` (a + b sin(omega t), a > |b|) and ``tabulated``
    (piecewise-linear through ``nodes``/``values``, held constant after the
    last node).  ``b(t)`` has a closed form for every kind, so its
    certificate only has to cover rounding.
    """

    kind: str
    a: object = 1
    b: object = 0
    omega: object = 1
    nodes: tuple = ()
    values: tuple = ()

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise InvalidProfile(f"unknown profile kind {self.kind!r}")
        conv = lambda v: to_fraction(v)
        object.__setattr__(self, "a", conv(self.a))
        object.__setattr__(self, "b", conv(self.b))
        object.__setattr__(self, "omega", conv(self.omega))
        object.__setattr__(self, "nodes", tuple(conv(v) for v in self.nodes))
        object.__setattr__(self, "values", tuple(conv(v) for v in self.values))
        if self.kind == "constant" and self.a <= 0:
            raise InvalidProfile("constant diffusivity must be positive")
        if self.kind == "affine" and (self.a <= 0 or self.b < 0):
            raise InvalidProfile("affine diffusivity needs a > 0 and b >= 0")
        if self.kind == "sinusoidal" and (self.a <= abs(self.b) or self.omega == 0):
            raise InvalidProfile("sinusoidal diffusivity needs a > |b| and omega != 0")
        if self.kind == "tabulated":
            if len(self.nodes) < 2 or len(self.nodes) != len(self.values):
                raise InvalidProfile("tabulated profile needs matching nodes/values (>= 2)")
            if self.nodes[0] != 0 or any(b <= a for a, b in zip(self.nodes, self.nodes[1:])):
                raise InvalidProfile("tabulated nodes must start at 0 and increase strictly")
            if min(self.values) <= 0:
                raise InvalidProfile("tabulated diffusivity must be positive")

    @classmethod
    def constant(cls, c):
        return cls("constant", a=c)

    @classmethod
    def sinusoidal(cls, a, b, omega=1):
        return cls("sinusoidal", a=a, b=b, omega=omega)

    @property
    def lower_bound(self):
        """Exact positive lower bound ``m`` on ``alpha``."""
        if self.kind in ("constant", "affine"):
            return self.a
        if self.kind == "sinusoidal":
            return self.a - abs(self.b)
        return min(self.values)

    def alpha(self, t):
        t = mpf(t)
        a, b = to_mpf(self.a), to_mpf(self.b)
        if self.kind == "constant":
            return a
        if self.kind == "affine":
            return a + b * t
        if self.kind == "sinusoidal":
            return a + b * mp.sin(to_mpf(self.omega) * t)
        nodes = [to_mpf(v) for v in self.nodes]
        vals = [to_mpf(v) for v in self.values]
        if t >= nodes[-1]:
            return vals[-1]
        i = max(i for i in range(len(nodes)) if nodes[i] <= t)
        w = (t - nodes[i]) / (nodes[i + 1] - nodes[i])
        return vals[i] + w * (vals[i + 1] - vals[i])

    def accumulated(self, t, bits):
        """``(B, err)`` with ``|B - b(t)| <= err`` and ``B`` rounded to ``bits``."""
        with mp.workprec(bits + 24):
            t = +mpf(t)
            if t <= 0:
                return mpf(0), mpf(0)
            a, b = to_mpf(self.a), to_mpf(self.b)
            if self.kind == "constant":
                terms = [a * t]
            elif self.kind == "affine":
                terms = [a * t, b * t * t / 2]
            elif self.kind == "sinusoidal":
                w = to_mpf(self.omega)
                # 1 - cos(wt) = 2 sin^2(wt/2), no cancellation near t = 0
                terms = [a * t, 2 * b / w * mp.sin(w * t / 2) ** 2]
            else:
                terms = self._tabulated_terms(t)
            value = mp.fsum(terms)
            scale = mp.fsum(abs(v) for v in terms)
        with mp.workprec(bits):
            rounded = +value
        with mp.workprec(64):
            err = (scale * (len(terms) + 4)) * mpf(2) ** (-bits - 20) + abs(rounded - value)
            err = err * (1 + mpf(2) ** -40)
        return rounded, err

    def _tabulated_terms(self, t):
        nodes = [to_mpf(v) for v in self.nodes]
        vals = [to_mpf(v) for v in self.values]
        terms = []
        for i in range(len(nodes) - 1):
            lo, hi = nodes[i], nodes[i + 1]
            if t <= lo:
                break
            end = min(t, hi)
            slope = (vals[i + 1] - vals[i]) / (hi - lo)
            v_end = vals[i] + slope * (end - lo)
            terms.append((end - lo) * (vals[i] + v_end) / 2)
        if t > nodes[-1]:
            terms.append((t - nodes[-1]) * vals[-1])
        return terms

    def to_dict(self):
        out = {"kind": self.kind}
        if self.kind == "tabulated":
            out["nodes"] = [str(v) for v in self.nodes]
            out["values"] = [str(v) for v in self.values]
        else:
            out["a"] = str(self.a)
            if self.kind != "constant":
                out["b"] = str(self.b)
            if self.kind == "sinusoidal":
                out["omega"] = str(self.omega)
        return out


def _tail_bounds(spec, f, t_low):
    """Suffix bounds ``T_J = exp(lambda(J+1) t) * sum_{k>J} |f_k|`` for J = 0..K."""
    K = f.support
    with mp.workprec(64):
        suffix = [mpf(0)] * (K + 2)
        for k in range(K, 0, -1):
            suffix[k] = suffix[k + 1] + abs(f.coeff(k))
        bounds = []
        for J in range(K + 1):
            if suffix[J + 1] == 0:
                bounds.append(mpf(0))
            else:
                bounds.append(mp.exp(to_mpf(spec.lam(J + 1)) * t_low) * suffix[J + 1] * (1 + mpf(2) ** -30))
    return bounds


def _ball_tail(spec, f, t_low):
    # modes beyond the support, assuming |f_k| <= k^{-r} and nondecreasing gaps
    K = f.support
    r = to_mpf(to_fraction(f.smoothness_r))
    with mp.workprec(64):
        first = mp.exp(to_mpf(spec.lam(K + 1)) * t_low) * mpf(K + 1) ** (-r)
        q = mp.exp(-to_mpf(spec.gap(K + 1)) * t_low)
        return first / (1 - q) * (1 + mpf(2) ** -30)


def _evaluate(spec, f, x, t_mid, t_rad, tol, share, min_bits, ceiling, assume_ball_tail):
    tol = mpf(tol)
    if tol <= 0:
        raise ValueError("tol must be positive")
    with mp.workprec(64):
        # nudged down so rounding never lifts it above the true lower end
        t_low = (mpf(t_mid) - mpf(t_rad)) * (1 - mpf(2) ** -60)
    if t_low <= 0:
        raise ValueError("evaluation time must be positive")
    extra = _ball_tail(spec, f, t_low) if assume_ball_tail else mpf(0)
    if extra > tol / 2:
        raise TolUnachievable("tail beyond the datum's support exceeds the tolerance")
    bounds = _tail_bounds(spec, f, t_low)
    J = next(j for j, b in enumerate(bounds) if b <= tol / 2)
    drop = bounds[J] + extra
    if J == 0:
        return SeriesValue(mpf(0), drop, max(min_bits, 53))
    with mp.workprec(64):
        scale = mp.fsum(abs(f.coeff(k)) * mp.exp(to_mpf(spec.lam(k)) * t_low) for k in range(1, J + 1))
        target = tol * share
        if scale == 0:
            return SeriesValue(mpf(0), drop, max(min_bits, 53))
        bits = int(mp.ceil(mp.log(scale / target, 2))) + 2 * J.bit_length() + 24
    bits = max(bits, min_bits, 53)
    while True:
        if bits > ceiling:
            raise TolUnachievable(f"needs more than {ceiling} bits (precision ceiling)")
        with iv_precision(bits + 8):
            xi = to_iv(x)
            if t_rad:
                ti = to_iv(t_mid) + iv.mpf([-mpf(t_rad), mpf(t_rad)])
            else:
                ti = to_iv(t_mid)
            total = iv.mpf(0)
            for k in range(1, J + 1):
                c = f.coeff(k)
                if not c:
                    continue
                total += to_iv(c) * iv.exp(to_iv(spec.lam(k)) * ti) * iv.sin(k * xi)
            lo, hi = (mp.make_mpf(e) for e in total._mpi_)
        with mp.workprec(bits):
            value = (lo + hi) / 2
        with mp.workprec(bits + 16):
            # distance from the rounded midpoint to either endpoint bounds the error
            rad = max(hi - value, value - lo)
        with mp.workprec(64):
            rad = rad * (1 + mpf(2) ** -40)
        if rad <= target:
            return SeriesValue(value, rad + drop, bits)
        with mp.workprec(64):
            bits += max(8, int(mp.ceil(mp.log(rad / target, 2))) + 8)


def evaluate_solution(spec, f, x, t, tol, *, min_bits=0, ceiling=DEFAULT_CEILING_BITS,
                      assume_ball_tail=False):
    """``u(x, t)`` for the autonomous problem with ``|value - u| <= error <= tol``.

    ``x`` and ``t`` are taken as exact binary numbers.  Modes whose combined
    contribution is provably below ``tol/2`` are dropped; rounding is kept
    below ``tol/10``.  With ``assume_ball_tail`` the datum is treated as the
    head of an infinite expansion with ``|f_k| <= k^{-r}`` beyond its support.
    """
    return _evaluate(spec, f, x, t, 0, tol, mpf("0.1"), min_bits, ceiling, assume_ball_tail)


def evaluate_nonautonomous(profile, f, x, t, tol, *, min_bits=0, ceiling=DEFAULT_CEILING_BITS):
    """``u(x, t)`` for ``u_t = alpha(t) u_xx``, certified to ``tol``.

    ``b(t)`` is evaluated with its own certificate, and the interval
    ``[B - err, B + err]`` is pushed through the exponentials so the
    returned error already covers the uncertainty in ``b``.
    """
    return _nonautonomous(profile, f, x, t, tol, min_bits, ceiling)[0]


def _nonautonomous(profile, f, x, t, tol, min_bits, ceiling):
    # returns the certified value together with the B it was evaluated around
    tol = mpf(tol)
    bits_b = max(min_bits, 128)
    while True:
        if bits_b > ceiling:
            raise TolUnachievable("cannot resolve b(t) finely enough")
        B, err_b = profile.accumulated(t, bits_b)
        with mp.workprec(64):
            # first-order spread of the series over [B - err, B + err]
            t_low = B - err_b
            spread = err_b * mp.fsum(
                abs(f.coeff(k)) * k * k * mp.exp(-k * k * t_low) for k in range(1, f.support + 1)
            )
        if spread <= tol / 4:
            break
        with mp.workprec(64):
            bits_b += max(16, int(mp.ceil(mp.log(spread / (tol / 4), 2))) + 8)
    # rounding and dropped modes get the remaining share of the tolerance
    return _evaluate(HEAT, f, x, B, err_b, tol, mpf("0.35"), min_bits, ceiling, False), B


@dataclass(frozen=True)
class Trace:
    """Samples ``u(x0, t_j)`` with per-sample absolute error bounds."""

    x0: mpf
    times: tuple
    samples: tuple
    errors: tuple
    mantissa_bits: int
    sample_bits: tuple = ()
    noise: float = None
    # b(t_j) used while sampling a non-autonomous problem; empty otherwise
    effective_times: tuple = ()

    def __post_init__(self):
        if len(self.samples) != len(self.times) or len(self.errors) != len(self.times):
            raise ValueError("times, samples and errors must have equal length")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("trace times must increase strictly")
        if self.effective_times and len(self.effective_times) != len(self.times):
            raise ValueError("effective_times must match times in length")

    def __len__(self):
        return len(self.times)

    def to_json(self):
        out = {
            "x0": mpf_to_str(self.x0),
            "times": [mpf_to_str(t) for t in self.times],
            "samples": [mpf_to_str(u) for u in self.samples],
            "errors": [mpf_to_str(e) for e in self.errors],
            "mantissa_bits": self.mantissa_bits,
            "sample_bits": list(self.sample_bits),
        }
        if self.noise is not None:
            out["noise"] = self.noise
        if self.effective_times:
            out["effective_times"] = [mpf_to_str(b) for b in self.effective_times]
        return json.dumps(out)

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        read = mpf_from_str
        times = tuple(read(s) for s in data["times"])
        return cls(
            x0=read(data["x0"]),
            times=times,
            samples=tuple(read(s) for s in data["samples"]),
            errors=tuple(read(s) for s in data.get("errors", ["0"] * len(times))),
            mantissa_bits=int(data["mantissa_bits"]),
            sample_bits=tuple(data.get("sample_bits", ())),
            noise=data.get("noise"),
            effective_times=tuple(read(s) for s in data.get("effective_times", ())),
        )


def sample_trace(source, f, plan, tol, *, min_bits=0, ceiling=DEFAULT_CEILING_BITS,
                 noise=None, noise_seed=0):
    """Sample the solution at ``plan.x0`` and every ``plan.times[j]``.

    ``source`` is an :class:`OperatorSpec` or a :class:`DiffusivityProfile`.
    ``tol`` may be one tolerance or one per sample.  Optional additive
    Gaussian noise (std ``noise``) is recorded on the trace.
    """
    times = tuple(plan.times)
    if not times:
        raise ValueError("plan has no sampling times")
    tols = list(tol) if isinstance(tol, (list, tuple)) else [tol] * len(times)
    if len(tols) != len(times):
        raise ValueError("need one tolerance per sample")
    values, errors, bits, eff = [], [], [], []
    for t, tj in zip(times, tols):
        if isinstance(source, OperatorSpec):
            res = evaluate_solution(source, f, plan.x0, t, tj, min_bits=min_bits, ceiling=ceiling)
        elif isinstance(source, DiffusivityProfile):
            res, B = _nonautonomous(source, f, plan.x0, t, tj, min_bits, ceiling)
            eff.append(B)
        else:
            raise TypeError("source must be an OperatorSpec or a DiffusivityProfile")
        values.append(res.value)
        errors.append(res.error)
        bits.append(res.bits)
    if noise:
        rng = np.random.default_rng(noise_seed)
        kicks = rng.normal(0.0, float(noise), size=len(values))
        values = [v + mpf(float(e)) for v, e in zip(values, kicks)]
    return Trace(plan.x0, times, tuple(values), tuple(errors), max(bits), tuple(bits),
                 float(noise) if noise else None, tuple(eff))
