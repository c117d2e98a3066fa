"""End-to-end runs: synthesize a datum, sample it, recover it and report."""

import csv
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from mpmath import mp, mpf

from .errors import ConfigError, PrecisionInsufficient
from .forward_solver import DiffusivityProfile, sample_trace
from .initial_data import InitialDatum, random_ball_member
from .operator_spectrum import HEAT, OperatorSpec
from .precision import mpf_to_str
from .recovery import recover, sample_tolerances, working_bits
from .sampling_schedule import build_plan

CSV_COLUMNS = ("n", "m", "l2_error", "l2_budget", "max_violation", "mantissa_bits", "sound")


def build_source(config):
    if config.alpha is not None:
        return OperatorSpec(config.alpha)
    prof = dict(config.profile)
    kind = prof.pop("kind")
    return DiffusivityProfile(kind, **prof)


def build_datum(config):
    if config.datum_kind == "zero":
        return InitialDatum((0,), config.r)
    if config.datum_kind == "file":
        path = Path(config.datum_path)
        if not path.is_absolute():
            path = Path(config.base_dir) / path
        try:
            return InitialDatum.from_json(path.read_text())
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"cannot load datum from {path}: {exc}") from None
    return random_ball_member(config.r, config.K, config.margin, config.seed)


def _spectrum(source):
    return source if isinstance(source, OperatorSpec) else HEAT


def run_case(config, n, source=None, datum=None):
    """One full recovery with ``n`` samples; returns ``(plan, trace, result)``."""
    source = source or build_source(config)
    datum = datum or build_datum(config)
    plan = build_plan(source, t1=config.t1, n=n, rho=config.rho, x0=config.x0, k_scan=config.k_scan)
    spec = _spectrum(source)
    times = plan.effective_times(256)
    ceiling = config.effective_ceiling()
    if config.mantissa_bits == "auto":
        bits = working_bits(spec, times, config.sample_guard_bits)
    else:
        bits = int(config.mantissa_bits)
    if bits > ceiling:
        raise PrecisionInsufficient(ceiling, bits)
    tols = sample_tolerances(spec, times, config.sample_guard_bits)
    trace = sample_trace(source, datum, plan, tols, ceiling=ceiling,
                         noise=config.noise or None, noise_seed=config.noise_seed)
    with mp.workprec(64):
        a0_tol = mpf(config.a0_tol)
    result = recover(trace, spec, plan, truth=datum, mantissa_bits=bits, a0_tol=a0_tol)
    return plan, trace, result


def _fmt(x):
    """17 significant digits, plain decimal."""
    if x is None:
        return ""
    with mp.workprec(80):
        return mp.nstr(mpf(x), 17, min_fixed=-4, max_fixed=17)


def run_recover(config, out_dir):
    """Recover one case, write ``recover.json`` and ``summary.txt``; return ``(result, exit_code)``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    plan, trace, result = run_case(config, config.n)
    elapsed = time.perf_counter() - start
    payload = {
        "plan": plan.to_dict(),
        "trace": json.loads(trace.to_json()),
        "result": result.to_dict(),
    }
    (out / "recover.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    sound = result.sound
    lines = [
        f"n = {result.n}, m = {result.m}, mantissa bits = {result.mantissa_bits}",
        f"rho = {_fmt(plan.rho)}, t1 = {_fmt(plan.t1)}, d0 = {plan.d0:.6g}",
        f"A0(t1) = {_fmt(result.a0.value)}",
        f"l2 error = {_fmt(result.l2_error)} (arithmetic budget {_fmt(result.l2_budget)})",
        f"max bound violation = {_fmt(result.max_violation)}",
        f"bounds respected: {'yes' if sound else 'NO'}",
        f"wall time = {elapsed:.2f} s",
    ]
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return result, 0 if sound else 1


@dataclass
class SweepRow:
    n: int
    m: int
    l2_error: mpf
    l2_budget: mpf
    max_violation: mpf
    mantissa_bits: int
    sound: bool
    wall_time: float = field(default=0.0, compare=False)

    def csv_fields(self):
        return [self.n, self.m, _fmt(self.l2_error), _fmt(self.l2_budget),
                _fmt(self.max_violation), self.mantissa_bits, int(self.sound)]

    def to_dict(self):
        return {
            "n": self.n, "m": self.m, "l2_error": mpf_to_str(self.l2_error),
            "l2_budget": mpf_to_str(self.l2_budget),
            "max_violation": mpf_to_str(self.max_violation),
            "mantissa_bits": self.mantissa_bits, "sound": self.sound,
        }


@dataclass
class SweepReport:
    rows: list
    slope: object  # float, or "floor" when fewer than two rows sit above the floor
    residual: float
    fitted_rows: list

    @property
    def sound(self):
        return all(row.sound for row in self.rows)

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in self.rows:
            writer.writerow(row.csv_fields())
        return buf.getvalue()

    def to_dict(self):
        return {
            "rows": [row.to_dict() for row in self.rows],
            "slope": self.slope if isinstance(self.slope, str) else repr(self.slope),
            "residual": None if self.residual is None else repr(self.residual),
            "fitted_n": self.fitted_rows,
        }


def fit_slope(rows):
    """Least-squares slope of ``log l2_error`` on ``log n``.

    Rows with ``l2_error <= 10 * l2_budget`` sit at the arithmetic floor and
    are left out; with fewer than two rows left the result is ``"floor"``.
    Returns ``(slope, rms_residual, fitted_ns)``.
    """
    keep = [r for r in rows if r.l2_error > 10 * r.l2_budget and r.l2_error > 0]
    if len(keep) < 2:
        return "floor", None, [r.n for r in keep]
    with mp.workprec(64):
        x = np.array([float(mp.log(r.n)) for r in keep])
        y = np.array([float(mp.log(r.l2_error)) for r in keep])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return float(slope), float(np.sqrt(np.mean(resid ** 2))), [r.n for r in keep]


def _sweep_row(args):
    config, n = args
    start = time.perf_counter()
    _, _, res = run_case(config, n)
    with mp.workprec(64):
        row = SweepRow(n, res.m, +res.l2_error, +res.l2_budget, +res.max_violation,
                       res.mantissa_bits, res.sound)
    row.wall_time = time.perf_counter() - start
    return row


def run_sweep(config, out_dir, jobs=1):
    """One recovery per ``n`` on the same datum; writes ``sweep.csv`` and ``sweep.json``."""
    if len(config.n_list) < 3:
        raise ConfigError("a sweep needs at least three values in plan.n_list")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tasks = [(config, n) for n in config.n_list]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_row, tasks))
    else:
        rows = [_sweep_row(t) for t in tasks]
    rows.sort(key=lambda r: r.n)
    slope, residual, fitted = fit_slope(rows)
    report = SweepReport(rows, slope, residual, fitted)
    (out / "sweep.csv").write_text(report.to_csv())
    (out / "sweep.json").write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    lines = [f"{'n':>4} {'m':>3} {'l2_error':>24} {'max_violation':>24} {'bits':>8} {'time':>8}"]
    for r in rows:
        lines.append(f"{r.n:>4} {r.m:>3} {_fmt(r.l2_error):>24} {_fmt(r.max_violation):>24} "
                     f"{r.mantissa_bits:>8} {r.wall_time:>7.2f}s")
    fit = slope if isinstance(slope, str) else f"{slope:.4f} (rms residual {residual:.3g})"
    lines.append(f"slope of log error vs log n: {fit}")
    lines.append(f"bounds respected on every row: {'yes' if report.sound else 'NO'}")
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return report, 0 if report.sound else 1
