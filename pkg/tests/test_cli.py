import json
import math
import subprocess
import sys

import pytest

from isoheat.cli import main
from isoheat.config import ConfigError, parse_config_text, parse_value, resolve


def _run(tmp_path, *args, name="out"):
    out = tmp_path / name
    status = main([*args, "--out-dir", str(out)])
    return status, out


def _json(path):
    return json.loads(path.read_text(encoding="utf-8"))


def test_constants(tmp_path):
    status, out = _run(tmp_path, "constants")
    assert status == 0
    rep = _json(out / "constants.json")
    assert rep["v0"] == math.exp(-4)
    assert rep["config"]["problem"] == {"n": 2, "alpha": 1.0}
    assert rep["C_J"] == pytest.approx(math.exp(-2) / 2, rel=1e-6)


def test_func_ineq_zero_trials(tmp_path):
    status, out = _run(tmp_path, "check-func-ineq", "--trials", "0")
    assert status == 0
    rep = _json(out / "check_func_ineq.json")
    assert rep["functional"]["trials"] == 0
    assert rep["functional"]["passed"] and rep["functional"]["worst_margin"] is None
    assert "decomposition" not in rep


@pytest.mark.parametrize("args", [("profile",), ("constants",), ("bounds", "--t-min", "1e-3", "--t-max", "10",
                                                                   "--points", "5")])
def test_deterministic_output(tmp_path, args):
    s1, a = _run(tmp_path, *args, name="a")
    s2, b = _run(tmp_path, *args, name="b")
    assert s1 == s2 == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes()


def test_profile_csv_header(tmp_path):
    _, out = _run(tmp_path, "profile", "--points", "10")
    lines = (out / "profile.csv").read_text().splitlines()
    assert lines[0] == "v,exact,J,tilde_I"
    assert len(lines) == 11


def test_bounds_csv_format(tmp_path):
    _, out = _run(tmp_path, "bounds", "--t-min", "1e-3", "--t-max", "10", "--points", "5")
    for name in ("upper.csv", "lower.csv"):
        lines = (out / name).read_text().splitlines()
        assert lines[0] == "t,value,kind,n,alpha"
        assert len(lines) == 6


def test_unknown_command(tmp_path, capsys):
    status, _ = _run(tmp_path, "frobnicate")
    assert status == 1
    assert capsys.readouterr().err.startswith("isoheat:")


def test_bad_dimension(tmp_path):
    status, _ = _run(tmp_path, "constants", "--n", "0")
    assert status == 1


def test_malformed_config(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("[problem]\nthis line has no equals sign\n", encoding="utf-8")
    status, _ = _run(tmp_path, "constants", "--config", str(cfg))
    assert status == 1
    err = capsys.readouterr().err
    assert err.count("\n") == 1


def test_missing_config(tmp_path):
    status, _ = _run(tmp_path, "constants", "--config", str(tmp_path / "nope.cfg"))
    assert status == 1


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    status = main(["constants", "--out-dir", str(blocker / "sub")])
    assert status == 1


def test_failed_check_exits_two(tmp_path):
    # two modes cannot resolve short times, so the fit breaks down
    status, _ = _run(tmp_path, "heat-oracle", "--grid-size", "200", "--n-modes", "2")
    assert status == 2


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\n[problem]\nn = 3\nalpha = 2.0\n", encoding="utf-8")
    status, out = _run(tmp_path, "constants", "--config", str(cfg), "--alpha", "1.0")
    assert status == 0
    rep = _json(out / "constants.json")
    assert rep["config"]["problem"] == {"n": 3, "alpha": 1.0}
    assert rep["v0"] == math.exp(-6)


def test_config_grammar():
    cfg = parse_config_text("# top\n[problem]\nn = 3  # inline\nalpha=0.5\n[spectral]\nradii = 0.1, 1, 2.5\n")
    assert cfg["problem"] == {"n": 3, "alpha": 0.5}
    assert cfg["spectral"]["radii"] == [0.1, 1, 2.5]


def test_config_grammar_errors():
    # keys before any header belong to [problem]
    assert parse_config_text("n = 2\n") == {"problem": {"n": 2}}
    with pytest.raises(ConfigError):
        parse_config_text("[problem]\njunk\n")
    with pytest.raises(ConfigError):
        parse_config_text("[problem]\n = 2\n")


def test_parse_value():
    assert parse_value("true") is True
    assert parse_value("none") is None
    assert parse_value("12") == 12
    assert parse_value("1e-3") == 1e-3
    assert parse_value("abc") == "abc"


def test_resolve_rejects_unknown_key():
    with pytest.raises(ConfigError):
        resolve({"problem": {"dim": 2}}, {})


def test_heat_oracle_report(tmp_path):
    status, out = _run(tmp_path, "heat-oracle")
    rep = _json(out / "heat_oracle.json")
    assert rep["config"]["heat-oracle"]["grid_size"] == 2000
    assert rep["r_squared"] >= 0.99
    assert rep["checks"]["chapman_kolmogorov"]
    assert rep["sector"] == "radial"
    # the bare exponent misses its band, so the run reports a violation
    assert status == 2
    assert (out / "heat_oracle.csv").read_text().splitlines()[0] == "t,sup_diag,argmax_r,n_modes,n,alpha"


@pytest.mark.xfail(strict=True, reason="bare fit on the oracle curve gives 0.18 for alpha = 1")
def test_heat_oracle_beta_star_band(tmp_path):
    _, out = _run(tmp_path, "heat-oracle")
    assert 0.2833 <= _json(out / "heat_oracle.json")["beta_star"] <= 0.3833


def test_console_script(tmp_path):
    out = tmp_path / "cs"
    r = subprocess.run([sys.executable, "-m", "isoheat.cli", "constants", "--out-dir", str(out)],
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert (out / "constants.json").exists()
