"""Sampling plans: a point ``x0`` that sees every sine mode, and increasing
time sequences (geometric, or geometric in accumulated diffusivity)."""

import ast
import operator
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from mpmath import mp, mpf

from .errors import ResonantPoint, RhoBelowThreshold, RootBracketFailure
from .forward_solver import DiffusivityProfile
from .operator_spectrum import OperatorSpec, rho_threshold, stable_rho
from .precision import DEFAULT_PLAN_BITS, mpf_to_str, to_fraction, to_mpf

DEFAULT_X0 = "pi*(sqrt(5)-1)/2"
DEFAULT_K_SCAN = 10 ** 6
RHO_MARGIN = Fraction(105, 100)
DEFAULT_HORIZON = mpf(10) ** 15

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_FUNCS = {"sqrt": lambda v: mp.sqrt(v), "sin": lambda v: mp.sin(v), "cos": lambda v: mp.cos(v)}


def parse_real(expr, bits=DEFAULT_PLAN_BITS):
    """Evaluate a small arithmetic expression such as ``"pi*(sqrt(5)-1)/2"``.

    Only numbers, ``pi``, ``e``, ``sqrt/sin/cos`` and ``+ - * / **`` are allowed.
    """
    if not isinstance(expr, str):
        with mp.workprec(bits):
            return to_mpf(to_fraction(expr))

    def walk(node):
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return mpf(repr(node.value)) if isinstance(node.value, float) else mpf(node.value)
        if isinstance(node, ast.Name) and node.id in ("pi", "e"):
            return +mp.pi if node.id == "pi" else +mp.e
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](walk(node.left), walk(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = walk(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords):
            return _FUNCS[node.func.id](walk(node.args[0]))
        raise ValueError(f"unsupported expression element in {expr!r}")

    with mp.workprec(bits + 32):
        value = walk(ast.parse(expr.strip(), mode="eval"))
    with mp.workprec(bits):
        return +value


def scan_sampling_point(x0, k_scan):
    """``d0 = min_{k <= k_scan} k |sin(k x0)|``.

    ``k x0 / pi`` is reduced mod 1 in 64-bit fixed point (exact modular
    products), so the distance to the nearest multiple of pi is known to
    within ``k * 2^-64``; anything that close to zero is reported resonant.
    """
    if k_scan < 1:
        raise ValueError("k_scan must be positive")
    with mp.workprec(DEFAULT_PLAN_BITS):
        theta = mpf(x0) / mp.pi
        if not 0 < theta < 1:
            raise ValueError("x0 must lie strictly between 0 and pi")
        fixed = int(mp.floor(theta * mpf(2) ** 64))
    ks = np.arange(1, k_scan + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        prod = ks * np.uint64(fixed)
        back = np.uint64(0) - prod
    dist = np.minimum(prod, back)
    # fixed-point truncation error is below k units of 2^-64
    close = dist <= 2 * ks + 2
    if close.any():
        raise ResonantPoint(int(ks[np.argmax(close)]))
    frac = (dist >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
    values = ks.astype(np.float64) * np.sin(np.pi * frac)
    return float(values.min())


def default_rho(spec_or_n):
    """Ratio used when a plan asks for ``rho = "auto"``: 5% above :func:`stable_rho`."""
    return RHO_MARGIN * stable_rho(spec_or_n)


def _check_rho(rho, n_half):
    with mp.workprec(DEFAULT_PLAN_BITS):
        threshold = rho_threshold(n_half)
        if not mpf(rho) > threshold:
            raise RhoBelowThreshold(rho, float(threshold))


def geometric_times(t1, rho, n, spec):
    """``t_j = rho^{j-1} t1`` for ``j = 1..n``; ``rho`` must exceed ``2N ln 2``."""
    if n < 1:
        raise ValueError("n must be positive")
    with mp.workprec(DEFAULT_PLAN_BITS):
        t1, rho = mpf(t1), mpf(rho)
        if t1 <= 0:
            raise ValueError("t1 must be positive")
        _check_rho(rho, spec.order_half)
        times = [t1]
        for _ in range(n - 1):
            times.append(times[-1] * rho)
    return times


def rescaled_times(profile, t1, rho, n, *, bits=DEFAULT_PLAN_BITS, horizon=DEFAULT_HORIZON):
    """Times with ``b(t_j) >= rho^{j-1} b(t1)`` for a heat profile.

    Each ``t_j`` is found by bisection on the increasing ``b`` down to one ulp,
    then moved up until the certified lower value of ``b`` reaches the target.
    """
    if n < 1:
        raise ValueError("n must be positive")
    with mp.workprec(bits):
        t1, rho = mpf(t1), mpf(rho)
        if t1 <= 0:
            raise ValueError("t1 must be positive")
        _check_rho(rho, 1)
        b1, err1 = profile.accumulated(t1, bits)
        times = [t1]
        # upper value of b(t1) keeps the targets on the safe side
        target = b1 + err1
        for _ in range(n - 1):
            target = target * rho
            times.append(_invert_b(profile, target, times[-1], bits, horizon))
    return times


def _invert_b(profile, target, lo, bits, horizon):
    b_lower = lambda t: (lambda v: v[0] - v[1])(profile.accumulated(t, bits))
    hi = lo * 2 if lo > 0 else mpf(1)
    while b_lower(hi) < target:
        hi *= 2
        if hi > horizon:
            raise RootBracketFailure(f"b(t) does not reach {target} before t = {horizon}")
    while True:
        mid = (lo + hi) / 2
        if mid <= lo or mid >= hi:
            break
        if b_lower(mid) < target:
            lo = mid
        else:
            hi = mid
    t = hi
    while b_lower(t) < target:
        t = mp.mpf(t) + mp.mpf(2) ** (int(mp.floor(mp.log(t, 2))) - bits + 1)
    return t


@dataclass(frozen=True)
class SamplingPlan:
    """Where and when to sample.

    ``mode`` is ``autonomous`` (geometric times), ``rescaled`` (times from
    ``b``-geometric targets for ``profile``) or ``explicit`` (caller-given
    times, used for oracles and comparisons).
    """

    x0: mpf
    x0_expr: str
    d0: float
    k_scan: int
    t1: mpf
    rho: mpf
    n: int
    times: tuple
    mode: str = "autonomous"
    profile: DiffusivityProfile = None
    order_half: int = 1

    def __post_init__(self):
        if self.mode not in ("autonomous", "rescaled", "explicit"):
            raise ValueError(f"unknown plan mode {self.mode!r}")
        if len(self.times) != self.n:
            raise ValueError("plan must hold exactly n times")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("sampling times must increase strictly")
        if self.mode == "rescaled" and self.profile is None:
            raise ValueError("rescaled plans need a diffusivity profile")

    def effective_times(self, bits):
        """Times as seen by the spectrum: ``b(t_j)`` for rescaled plans, else ``t_j``."""
        if self.mode != "rescaled":
            return list(self.times)
        return [self.profile.accumulated(t, bits)[0] for t in self.times]

    def effective_times_lower(self, bits):
        """Certified lower values of :meth:`effective_times` (used in bounds)."""
        if self.mode != "rescaled":
            return list(self.times)
        out = []
        for t in self.times:
            B, err = self.profile.accumulated(t, bits)
            with mp.workprec(bits):
                out.append(B - err)
        return out

    def to_dict(self):
        out = {
            "x0": mpf_to_str(self.x0), "x0_expr": self.x0_expr, "d0": self.d0,
            "k_scan": self.k_scan, "t1": mpf_to_str(self.t1), "rho": mpf_to_str(self.rho),
            "n": self.n, "times": [mpf_to_str(t) for t in self.times], "mode": self.mode,
        }
        if self.profile is not None:
            out["profile"] = self.profile.to_dict()
        return out


def build_plan(source, *, t1, n, rho="auto", x0=DEFAULT_X0, k_scan=DEFAULT_K_SCAN):
    """Assemble a validated plan for an operator or a heat diffusivity profile."""
    x0_value = parse_real(x0)
    d0 = scan_sampling_point(x0_value, k_scan)
    n_half = source.order_half if isinstance(source, OperatorSpec) else 1
    with mp.workprec(DEFAULT_PLAN_BITS):
        rho_value = to_mpf(default_rho(n_half)) if rho == "auto" else parse_real(rho)
        t1_value = parse_real(t1)
    if isinstance(source, DiffusivityProfile):
        times = rescaled_times(source, t1_value, rho_value, n)
        mode, profile = "rescaled", source
    else:
        times = geometric_times(t1_value, rho_value, n, source)
        mode, profile = "autonomous", None
    return SamplingPlan(x0_value, str(x0), d0, k_scan, t1_value, rho_value, n, tuple(times),
                        mode, profile, n_half)


def explicit_plan(x0, times, *, k_scan=1000):
    """Plan with caller-chosen increasing times (no ratio requirement)."""
    x0_value = parse_real(x0)
    d0 = scan_sampling_point(x0_value, k_scan)
    times = tuple(times)
    return SamplingPlan(x0_value, str(x0), d0, k_scan, times[0], mpf(0), len(times), times,
                        "explicit", None, 1)


__all__ = [
    "DEFAULT_X0", "DEFAULT_K_SCAN", "SamplingPlan", "build_plan", "default_rho",
    "explicit_plan", "geometric_times", "parse_real", "rescaled_times", "scan_sampling_point",
]
