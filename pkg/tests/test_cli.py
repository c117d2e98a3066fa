import json
import subprocess
import sys

import pytest
from mpmath import mpf

from dynsample import ConfigError
from dynsample.cli import main, run_lemma_checks
from dynsample.config import CEILING_ENV, parse_config
from dynsample.pipeline import SweepRow, fit_slope

BASE = """
[operator]
alpha = [1]
[datum]
kind = "{kind}"
r = {r}
K = {K}
seed = {seed}
[plan]
t1 = "0.5"
{nline}
k_scan = 1000
{extra}
"""


def write_config(tmp_path, name="c.toml", kind="random", r=2.0, K=200, seed=7, nline="n = 8", extra=""):
    path = tmp_path / name
    path.write_text(BASE.format(kind=kind, r=r, K=K, seed=seed, nline=nline, extra=extra))
    return path


def minimal(**plan):
    return {"operator": {"alpha": [1]}, "plan": {"t1": 0.5, "n": 4, **plan}}


def test_config_defaults_and_exact_numbers():
    cfg = parse_config({"operator": {"alpha": [1, "-1/3"]}, "plan": {"t1": 0.1, "n_list": [2, 4, 6]}})
    assert cfg.alpha == ("1", "-1/3")
    assert cfg.t1 == "0.1"
    assert cfg.n == 6 and cfg.is_sweep
    assert cfg.rho == "auto" and cfg.datum_kind == "random"


@pytest.mark.parametrize("data", [
    {"operator": {"alpha": [1]}, "plan": {"t1": 1, "n": 3}, "extra": 1},
    {"operator": {"alpha": [1], "beta": 2}, "plan": {"t1": 1, "n": 3}},
    {"operator": {"alpha": [1]}, "profile": {"kind": "constant"}, "plan": {"t1": 1, "n": 3}},
    {"plan": {"t1": 1, "n": 3}},
    {"operator": {"alpha": [1]}, "plan": {"n": 3}},
    {"operator": {"alpha": [1]}, "plan": {"t1": 1, "n_list": [4, 4, 8]}},
    {"operator": {"alpha": [1]}, "plan": {"t1": 1, "n": 3, "n_list": [1, 2, 3]}},
    {"operator": {"alpha": [1]}, "plan": {"t1": 1, "n": 3}, "datum": {"kind": "file"}},
    {"operator": {"alpha": [1]}, "plan": {"t1": 1, "n": 3}, "datum": {"K": 2.5}},
])
def test_config_is_strict(data):
    with pytest.raises(ConfigError):
        parse_config(data)


def test_ceiling_environment_override(monkeypatch):
    cfg = parse_config(minimal())
    monkeypatch.setenv(CEILING_ENV, "1234")
    assert cfg.effective_ceiling() == 1234
    monkeypatch.setenv(CEILING_ENV, "lots")
    with pytest.raises(ConfigError):
        cfg.effective_ceiling()


def test_recover_zero_datum(tmp_path):
    cfg = write_config(tmp_path, kind="zero")
    assert main(["recover", str(cfg), "--out", str(tmp_path / "out")]) == 0
    data = json.loads((tmp_path / "out" / "recover.json").read_text())
    assert data["result"]["l2_error"] == "0"
    assert data["result"]["sound"] is True


def test_recover_random_datum_respects_bounds(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["recover", str(cfg), "--out", str(tmp_path / "out")]) == 0
    data = json.loads((tmp_path / "out" / "recover.json").read_text())
    assert all(mpf(v) <= 0 for v in data["result"]["violations"])
    assert data["result"]["m"] == 4


def test_recover_rejects_low_ratio(tmp_path, capsys):
    cfg = write_config(tmp_path, nline="n = 8\nrho = 1.0")
    assert main(["recover", str(cfg), "--out", str(tmp_path / "out")]) != 0
    assert "RhoBelowThreshold" in capsys.readouterr().err


def test_precision_ceiling_from_environment(tmp_path, monkeypatch, capsys):
    cfg = write_config(tmp_path)
    monkeypatch.setenv(CEILING_ENV, "200")
    assert main(["recover", str(cfg), "--out", str(tmp_path / "out")]) == 3
    assert "PrecisionInsufficient" in capsys.readouterr().err


def test_bad_config_exit_code(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("[plan]\nt1 = 1\nn = 2\nbogus = 3\n[operator]\nalpha = [1]\n")
    assert main(["recover", str(path), "--out", str(tmp_path)]) == 2


def test_datum_from_file(tmp_path):
    (tmp_path / "f.json").write_text('{"r": 1.0, "coeffs": ["0.5", "-0.25"]}')
    cfg = write_config(tmp_path, kind="file", extra="")
    text = cfg.read_text().replace('kind = "file"', 'kind = "file"\npath = "f.json"')
    cfg.write_text(text)
    assert main(["recover", str(cfg), "--out", str(tmp_path / "out")]) == 0


def test_sweep_is_deterministic(tmp_path):
    cfg = write_config(tmp_path, r=1.0, nline="n_list = [4, 6, 8]")
    assert main(["sweep", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert main(["sweep", str(cfg), "--out", str(tmp_path / "b"), "--jobs", "2"]) == 0
    for name in ("sweep.csv", "sweep.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    header, *rows = (tmp_path / "a" / "sweep.csv").read_text().splitlines()
    assert header == "n,m,l2_error,l2_budget,max_violation,mantissa_bits,sound"
    assert [r.split(",")[0] for r in rows] == ["4", "6", "8"]
    assert all(len(r.split(",")[2].replace(".", "").lstrip("0")) <= 17 for r in rows)


def test_sweep_needs_three_rows(tmp_path):
    cfg = write_config(tmp_path, nline="n_list = [4, 8]")
    assert main(["sweep", str(cfg), "--out", str(tmp_path / "a")]) == 2


def test_band_limited_sweep_errors_collapse(tmp_path):
    cfg = write_config(tmp_path, K=2, nline="n_list = [4, 6, 8]")
    assert main(["sweep", str(cfg), "--out", str(tmp_path / "a")]) == 0
    rows = json.loads((tmp_path / "a" / "sweep.json").read_text())["rows"]
    errors = [mpf(r["l2_error"]) for r in rows]
    # no truncation error: only the exponentially small coupling between the two modes remains
    assert errors[0] < 1e-9 and errors[-1] < errors[0] * 1e-100


def test_zero_datum_sweep_is_floor(tmp_path):
    cfg = write_config(tmp_path, kind="zero", nline="n_list = [2, 3, 4]")
    assert main(["sweep", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert json.loads((tmp_path / "a" / "sweep.json").read_text())["slope"] == "floor"


def test_fit_slope_excludes_floor_rows():
    rows = [SweepRow(n, n // 2, mpf(n) ** -2, mpf(10) ** -40, mpf(-1), 100, True) for n in (4, 8, 16)]
    rows.append(SweepRow(32, 16, mpf(10) ** -39, mpf(10) ** -40, mpf(-1), 100, True))
    slope, resid, fitted = fit_slope(rows)
    assert slope == pytest.approx(-2) and fitted == [4, 8, 16] and resid < 1e-12
    assert fit_slope(rows[-1:] + rows[:1])[0] == "floor"


def test_lemma_checks_and_negative_control(tmp_path, capsys):
    assert main(["check-lemmas", "--xmax", "100", "--kmax", "20", "--lmax", "5",
                 "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "lemmas.json").read_text())
    assert report["passed"] and len(report["g_bound"]) == 4
    assert main(["check-lemmas", "--n", "1", "--xmax", "50", "--threshold", "0.9"]) == 1
    _, ok = run_lemma_checks((1,), 50, 10, 4, threshold=2 * 0.6931471805599453 - 0.1)
    assert ok


def test_scan_x0(tmp_path, capsys):
    assert main(["scan-x0", "pi*(sqrt(5)-1)/2", "--kscan", "10000", "--out", str(tmp_path)]) == 0
    assert "0.9320324238132276" in capsys.readouterr().out
    assert main(["scan-x0", "pi/2", "--kscan", "10"]) == 3


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "dynsample", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "check-lemmas" in proc.stdout
