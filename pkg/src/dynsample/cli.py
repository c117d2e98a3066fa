"""Command-line entry point: ``dynsample {recover,sweep,check-lemmas,scan-x0}``."""

import argparse
import json
import sys
from pathlib import Path

from .config import CEILING_ENV, load_config
from .errors import ConfigError, DynSampleError
from .operator_spectrum import check_g_bound, check_power_inequalities, g_value
from .pipeline import run_recover, run_sweep
from .sampling_schedule import parse_real, scan_sampling_point

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG, EXIT_FAILURE = 0, 1, 2, 3


def _out_dir(args, config=None):
    if args.out:
        return Path(args.out)
    if config is not None and config.out:
        return Path(config.base_dir) / config.out
    return Path("dynsample-out")


def cmd_recover(args):
    config = load_config(args.config)
    _, code = run_recover(config, _out_dir(args, config))
    return code


def cmd_sweep(args):
    config = load_config(args.config)
    _, code = run_sweep(config, _out_dir(args, config), jobs=args.jobs)
    return code


def run_lemma_checks(orders=(1, 2, 3, 4), x_max=500, k_max=50, l_max=8, threshold=None):
    """Grid checks behind the sampling ratio; returns ``(report dict, all passed)``."""
    report = {"g_bound": [], "power_inequalities": None}
    ok = True
    for n_half in orders:
        rep = check_g_bound(n_half, x_max, threshold)
        ok &= rep.passed
        report["g_bound"].append({
            "N": n_half, "x_max": x_max, "max_g": repr(rep.max_value),
            "argmax": list(rep.argmax), "threshold": repr(rep.threshold), "passed": rep.passed,
        })
    pw = check_power_inequalities(k_max, l_max)
    ok &= pw.passed
    report["power_inequalities"] = {
        "k_max": k_max, "l_max": l_max, "checked": pw.checked, "passed": pw.passed,
        "counterexample": None if pw.counterexample is None else list(pw.counterexample),
    }
    report["g_2_1_N1"] = repr(g_value(1, 2, 1))
    report["passed"] = bool(ok)
    return report, bool(ok)


def cmd_check_lemmas(args):
    orders = args.n if args.n else [1, 2, 3, 4]
    report, ok = run_lemma_checks(orders, args.xmax, args.kmax, args.lmax, args.threshold)
    for row in report["g_bound"]:
        status = "pass" if row["passed"] else "FAIL"
        print(f"g bound N={row['N']} x_max={row['x_max']}: max {float(row['max_g']):.6f} "
              f"at {tuple(row['argmax'])} vs {float(row['threshold']):.6f} ... {status}")
    pw = report["power_inequalities"]
    print(f"power inequalities k_max={pw['k_max']} l_max={pw['l_max']}: "
          f"{pw['checked']} checks ... {'pass' if pw['passed'] else 'FAIL'}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "lemmas.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_scan_x0(args):
    x0 = parse_real(args.expr)
    d0 = scan_sampling_point(x0, args.kscan)
    print(f"x0 = {args.expr}: d0 = min_(k<={args.kscan}) k|sin(k x0)| = {d0:.16g}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        payload = {"x0": args.expr, "k_scan": args.kscan, "d0": repr(d0)}
        (out / "scan_x0.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dynsample",
        description="Recover initial data of diffusion equations from samples at one point.",
        epilog=f"Set {CEILING_ENV} to override the precision ceiling (bits).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("recover", help="run one recovery from a TOML config")
    p.add_argument("config")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("sweep", help="recover for every n in plan.n_list and fit the rate")
    p.add_argument("config")
    p.add_argument("--out", help="output directory")
    p.add_argument("--jobs", type=int, default=1, help="rows computed in parallel")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("check-lemmas", help="integer grid checks for the sampling ratio")
    p.add_argument("--n", type=int, action="append", help="half-order N (repeatable)")
    p.add_argument("--xmax", type=int, default=500)
    p.add_argument("--kmax", type=int, default=50)
    p.add_argument("--lmax", type=int, default=8)
    p.add_argument("--threshold", type=float, default=None,
                   help="compare g against this value instead of 2N ln 2")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_check_lemmas)

    p = sub.add_parser("scan-x0", help="smallest k|sin(k x0)| over k <= kscan")
    p.add_argument("expr")
    p.add_argument("--kscan", type=int, default=10 ** 6)
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_scan_x0)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DynSampleError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
