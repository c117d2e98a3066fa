"""Experiment configuration read from TOML.

Layout (every key optional unless noted)::

    out = "results"

    [operator]            # exactly one of [operator] / [profile]
    alpha = [1]           # alpha_2, alpha_4, ... ; strings like "1/3" are exact

    [profile]
    kind = "sinusoidal"   # constant | affine | sinusoidal | tabulated
    a = 1
    b = "1/2"
    omega = 1
    nodes = [0, 1, 2]     # tabulated only
    values = [1, 2, 1]

    [datum]
    kind = "random"       # random | zero | file
    r = 1.0
    K = 200
    margin = 0.9
    seed = 7
    path = "f.json"       # kind = "file"

    [plan]
    x0 = "pi*(sqrt(5)-1)/2"
    t1 = "0.5"            # required
    rho = "auto"
    n = 8                 # or n_list = [4, 8, 12, 16]
    k_scan = 1000000

    [tolerances]
    sample_guard_bits = 64
    a0_tol = "1e-20"
    noise = 0.0
    noise_seed = 0

    [precision]
    mantissa_bits = "auto"
    ceiling_bits = 8000000

Unknown sections or keys are errors.
"""

import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .precision import DEFAULT_CEILING_BITS, DEFAULT_GUARD_BITS
from .sampling_schedule import DEFAULT_K_SCAN, DEFAULT_X0

CEILING_ENV = "DYNSAMPLE_MAX_BITS"

_SECTIONS = {
    "operator": {"alpha"},
    "profile": {"kind", "a", "b", "omega", "nodes", "values"},
    "datum": {"kind", "r", "K", "margin", "seed", "path"},
    "plan": {"x0", "t1", "rho", "n", "n_list", "k_scan"},
    "tolerances": {"sample_guard_bits", "a0_tol", "noise", "noise_seed"},
    "precision": {"mantissa_bits", "ceiling_bits"},
}
_TOP = {"out"}


def _exact(value, where):
    # floats keep their shortest decimal spelling so "0.1" means one tenth
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected a number, got a boolean")
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (int, str)):
        return str(value)
    raise ConfigError(f"{where}: expected a number or numeric string")


@dataclass(frozen=True)
class ExperimentConfig:
    alpha: tuple = None
    profile: dict = None
    datum_kind: str = "random"
    r: float = 1.0
    K: int = 200
    margin: float = 0.9
    seed: int = 0
    datum_path: str = None
    x0: str = DEFAULT_X0
    t1: str = None
    rho: str = "auto"
    n_list: tuple = ()
    k_scan: int = DEFAULT_K_SCAN
    sample_guard_bits: int = DEFAULT_GUARD_BITS
    a0_tol: str = "1e-20"
    noise: float = 0.0
    noise_seed: int = 0
    mantissa_bits: object = "auto"
    ceiling_bits: int = DEFAULT_CEILING_BITS
    out: str = None
    base_dir: str = "."
    raw: dict = field(default_factory=dict, compare=False)

    @property
    def n(self):
        return self.n_list[-1]

    @property
    def is_sweep(self):
        return len(self.n_list) > 1

    def effective_ceiling(self):
        """Ceiling from the environment when set, else from the config."""
        env = os.environ.get(CEILING_ENV)
        if env is None or env.strip() == "":
            return self.ceiling_bits
        try:
            value = int(env)
        except ValueError:
            raise ConfigError(f"{CEILING_ENV} must be an integer, got {env!r}") from None
        if value < 64:
            raise ConfigError(f"{CEILING_ENV} must be at least 64")
        return value


def parse_config(data, base_dir="."):
    """Validate a TOML-shaped dict and build an :class:`ExperimentConfig`."""
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a table")
    unknown = set(data) - set(_SECTIONS) - _TOP
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    for name, allowed in _SECTIONS.items():
        section = data.get(name, {})
        if not isinstance(section, dict):
            raise ConfigError(f"[{name}] must be a table")
        extra = set(section) - allowed
        if extra:
            raise ConfigError(f"unknown keys in [{name}]: {sorted(extra)}")

    kw = {"raw": data, "base_dir": str(base_dir)}
    if ("operator" in data) == ("profile" in data):
        raise ConfigError("give exactly one of [operator] or [profile]")
    if "operator" in data:
        alpha = data["operator"].get("alpha")
        if not isinstance(alpha, list) or not alpha:
            raise ConfigError("[operator] alpha must be a non-empty list")
        kw["alpha"] = tuple(_exact(a, "operator.alpha") for a in alpha)
    else:
        prof = dict(data["profile"])
        if "kind" not in prof:
            raise ConfigError("[profile] needs a kind")
        for key in ("a", "b", "omega"):
            if key in prof:
                prof[key] = _exact(prof[key], f"profile.{key}")
        for key in ("nodes", "values"):
            if key in prof:
                if not isinstance(prof[key], list):
                    raise ConfigError(f"profile.{key} must be a list")
                prof[key] = tuple(_exact(v, f"profile.{key}") for v in prof[key])
        kw["profile"] = prof

    datum = data.get("datum", {})
    kind = datum.get("kind", "random")
    if kind not in ("random", "zero", "file"):
        raise ConfigError(f"datum.kind must be random, zero or file, got {kind!r}")
    kw["datum_kind"] = kind
    if kind == "file":
        if "path" not in datum:
            raise ConfigError("datum.kind = 'file' needs a path")
        kw["datum_path"] = str(datum["path"])
    for key, typ in (("r", float), ("K", int), ("margin", float), ("seed", int)):
        if key in datum:
            value = datum[key]
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"datum.{key} must be numeric")
            if typ is int and not isinstance(value, int):
                raise ConfigError(f"datum.{key} must be an integer")
            kw[key] = typ(value)

    plan = data.get("plan", {})
    if "t1" not in plan:
        raise ConfigError("[plan] t1 is required")
    kw["t1"] = _exact(plan["t1"], "plan.t1")
    if "x0" in plan:
        kw["x0"] = _exact(plan["x0"], "plan.x0")
    if "rho" in plan:
        kw["rho"] = "auto" if plan["rho"] == "auto" else _exact(plan["rho"], "plan.rho")
    if ("n" in plan) == ("n_list" in plan):
        raise ConfigError("give exactly one of plan.n or plan.n_list")
    ns = [plan["n"]] if "n" in plan else plan["n_list"]
    if not isinstance(ns, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in ns):
        raise ConfigError("plan.n / plan.n_list must be integers")
    if not ns or min(ns) < 1:
        raise ConfigError("sample counts must be positive")
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ConfigError("plan.n_list must increase strictly")
    kw["n_list"] = tuple(ns)
    if "k_scan" in plan:
        kw["k_scan"] = _positive_int(plan["k_scan"], "plan.k_scan")

    tol = data.get("tolerances", {})
    if "sample_guard_bits" in tol:
        kw["sample_guard_bits"] = _positive_int(tol["sample_guard_bits"], "tolerances.sample_guard_bits")
    if "a0_tol" in tol:
        kw["a0_tol"] = _exact(tol["a0_tol"], "tolerances.a0_tol")
    if "noise" in tol:
        kw["noise"] = float(_exact(tol["noise"], "tolerances.noise"))
        if kw["noise"] < 0:
            raise ConfigError("tolerances.noise must be non-negative")
    if "noise_seed" in tol:
        kw["noise_seed"] = int(tol["noise_seed"])

    prec = data.get("precision", {})
    if "mantissa_bits" in prec and prec["mantissa_bits"] != "auto":
        kw["mantissa_bits"] = _positive_int(prec["mantissa_bits"], "precision.mantissa_bits")
    if "ceiling_bits" in prec:
        kw["ceiling_bits"] = _positive_int(prec["ceiling_bits"], "precision.ceiling_bits")
    if "out" in data:
        kw["out"] = str(data["out"])
    return ExperimentConfig(**kw)


def _positive_int(value, where):
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ConfigError(f"{where} must be a positive integer")
    return value


def load_config(path):
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(data, base_dir=path.parent)
