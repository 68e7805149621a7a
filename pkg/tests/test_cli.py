import json
import subprocess
import sys

import pytest

from screenlab.cli import main
from screenlab.config import ConfigError, parse_config

BASE = """
[distribution]
kind = uniform
lo = 1
hi = 2

[model]
N = {N}
alpha = {alpha}
"""


def write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def run(tmp_path, cmd, text, capsys):
    cfg = write(tmp_path, text)
    out = tmp_path / "out"
    code = main([cmd, "--config", str(cfg), "--out", str(out)])
    return code, out, capsys.readouterr()


def test_solve_writes_report(tmp_path, capsys):
    code, out, _ = run(tmp_path, "solve", BASE.format(N=2, alpha=2.0), capsys)
    assert code == 0
    data = json.loads((out / "solve.json").read_text())
    assert data["regime"] == "consecutive_menu"
    assert data["menu"] == [1.6339745962154286, 1.267949192431235]


def test_solve_refuses_low_alpha(tmp_path, capsys):
    code, _, cap = run(tmp_path, "solve", BASE.format(N=2, alpha=1.0), capsys)
    assert code == 2 and "refused" in cap.err


def test_missing_n_is_usage_error(tmp_path, capsys):
    text = "[distribution]\nkind = uniform\nlo = 1\nhi = 2\n[model]\nalpha = 2\n"
    code, _, cap = run(tmp_path, "solve", text, capsys)
    assert code == 64 and "N is required" in cap.err


@pytest.mark.parametrize(
    "extra,msg",
    [
        ("[model]\nN = 2\nalpha = 2\nbeta = 1\n", "unknown key"),
        ("[model]\nN = 2\nalpha = 2\n[solver]\nx = 1\n", "unknown section"),
        ("[model]\nN = two\n", "not a valid int"),
        ("[model]\nN = 2\nalpha_grid = 3, 2\n", "ascending"),
    ],
)
def test_config_rejections(extra, msg):
    text = "[distribution]\nkind = uniform\nlo = 1\nhi = 2\n" + extra
    with pytest.raises(ConfigError, match=msg):
        parse_config(text)


def test_distribution_params_validated():
    with pytest.raises(ConfigError, match="sigma"):
        parse_config("[distribution]\nkind = truncnorm\nmu = 1\nlo = 0\nhi = 2\n[model]\nN = 2\n")
    with pytest.raises(ConfigError):
        parse_config("[distribution]\nkind = uniform\nlo = 2\nhi = 2\n[model]\nN = 2\n")
    with pytest.raises(ConfigError, match="does not take"):
        parse_config("[distribution]\nkind = uniform\nlo = 1\nhi = 2\nmu = 0\n[model]\nN = 2\n")


def test_alpha_range_keys():
    cfg = parse_config(
        "[distribution]\nkind = uniform\nlo = 1\nhi = 2\n[model]\nN = 2\n"
        "alpha_start = 2\nalpha_stop = 3\nalpha_points = 3\n"
    )
    assert cfg.alpha_grid == (2.0, 2.5, 3.0)


def test_usage_errors(tmp_path, capsys):
    assert main(["solve"]) == 64
    assert "Missing option '--config'" in capsys.readouterr().err
    assert main(["frobnicate"]) == 64
    assert "No such command" in capsys.readouterr().err
    assert main(["solve", "--config", str(tmp_path / "missing.ini")]) == 64
    assert "cannot read config" in capsys.readouterr().err


def test_oracle_size_guard(tmp_path, capsys):
    code, _, cap = run(tmp_path, "oracle", BASE.format(N=4, alpha=2.0), capsys)
    assert code == 2 and "N <= 3" in cap.err


def test_oracle_small(tmp_path, capsys):
    code, out, _ = run(tmp_path, "oracle", BASE.format(N=1, alpha=2.0), capsys)
    assert code == 0
    data = json.loads((out / "oracle.json").read_text())
    assert abs(data["cutoffs"][""] - 1.5) <= data["final_step"]


def test_alpha_hat_prints_one_number(tmp_path, capsys):
    code, out, cap = run(tmp_path, "alpha-hat", BASE.format(N=2, alpha=2.0), capsys)
    assert code == 0
    lines = cap.out.strip().splitlines()
    assert len(lines) == 1 and abs(float(lines[0]) - 2.25) <= 1e-7
    assert json.loads((out / "alpha_hat.json").read_text())["alpha_hat"] == float(lines[0])


def test_check_reports_boundary_assumption(tmp_path, capsys):
    code, out, _ = run(tmp_path, "check", BASE.format(N=3, alpha=2.0), capsys)
    assert code == 0
    data = json.loads((out / "check.json").read_text())
    assert data["assumption2"]["a2_density_bound"] is True
    assert data["ok"] is True and all(data["checks"].values())


def test_sweep_csv(tmp_path, capsys):
    text = BASE.format(N=2, alpha=2.0).replace("alpha = 2.0", "alpha_grid = 2.0, 2.5, 6.0")
    code, out, _ = run(tmp_path, "sweep", text, capsys)
    assert code == 0
    rows = (out / "sweep.csv").read_text().splitlines()
    assert rows[0] == "alpha,regime,V_star,V_aw,c1,c2,expected_work" and len(rows) == 4


def test_simulate_and_paths(tmp_path, capsys):
    text = BASE.format(N=2, alpha=2.0) + "[simulation]\nn_paths = 20000\nseed = 3\ndump_paths = yes\n"
    code, out, _ = run(tmp_path, "simulate", text, capsys)
    assert code == 0
    data = json.loads((out / "simulate.json").read_text())
    assert data["n_paths"] == 20000
    assert (out / "paths.csv").read_text().count("\n") == 20001


def test_improve(tmp_path, capsys):
    code, out, _ = run(tmp_path, "improve", BASE.format(N=2, alpha=2.0) + "[improve]\nepsilon_fraction = 0.5\n", capsys)
    assert code == 0
    data = json.loads((out / "improve.json").read_text())
    assert data["delta"] > 0 and data["slack_min"] >= -1e-9
    code, _, _ = run(tmp_path, "improve", BASE.format(N=2, alpha=6.0), capsys)
    assert code == 2


def test_outputs_are_deterministic_and_config_untouched(tmp_path, capsys):
    text = BASE.format(N=2, alpha=2.0) + "[simulation]\nn_paths = 5000\nseed = 9\n"
    cfg = write(tmp_path, text)
    before = cfg.read_bytes()
    for sub in ("a", "b"):
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / sub)]) == 0
    assert (tmp_path / "a" / "simulate.json").read_bytes() == (tmp_path / "b" / "simulate.json").read_bytes()
    assert cfg.read_bytes() == before


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "screenlab", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "alpha-hat" in proc.stdout
