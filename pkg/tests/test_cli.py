import json
import math
import subprocess
import sys

import pytest

from gpcls.cli import main
from gpcls.sampling import SamplePlan

SMALL = """\
experiment.target = synthetic_scalar
experiment.n_grid = 64, 128, 256
basis.family = jacobi
mesh.nh = 32
field.J = 3
experiment.test_count = 200
"""


@pytest.fixture
def cfg(tmp_path):
    path = tmp_path / "small.cfg"
    path.write_text(SMALL)
    return str(path)


def test_widths_first_sigmas(tmp_path, cfg):
    out = tmp_path / "w"
    assert main(["widths", "--config", cfg, "--out", str(out), "--quiet"]) == 0
    data = json.loads((out / "widths.json").read_text())
    sig = [e["sigma"] for e in data["sigma"][:3]]
    assert sig == pytest.approx([1.0, 2 * math.sqrt(3), 4 * math.sqrt(3)], rel=1e-14)
    assert data["d_n"][0] == pytest.approx(1 / (2 * math.sqrt(3)), rel=1e-14)


def test_sample_writes_plan(tmp_path, cfg):
    out = tmp_path / "s"
    assert main(["sample", "--config", cfg, "--out", str(out), "--seed", "5", "--quiet"]) == 0
    plan = SamplePlan.from_csv((out / "plan.csv").read_text())
    assert len(plan) == 64 and plan.seed != 0


def test_recover_and_pde(tmp_path, cfg):
    out = tmp_path / "r"
    assert main(["recover", "--config", cfg, "--out", str(out), "--quiet"]) == 0
    summary = json.loads((out / "recovery.json").read_text())
    assert summary["status"] == "ok" and summary["n"] == 64
    assert json.loads((out / "recovery_approximant.json").read_text())["x_dim"] == 1
    assert main(["pde", "--config", cfg, "--out", str(out), "--quiet"]) == 0
    approx = json.loads((out / "pde_approximant.json").read_text())
    assert approx["x_dim"] == 31


def test_rates_csv_identical_across_runs(tmp_path, cfg):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["rates", "--config", cfg, "--out", str(a), "--quiet"]) == 0
    assert main(["rates", "--config", cfg, "--out", str(b), "--quiet", "--threads", "3"]) == 0
    assert (a / "rates.csv").read_bytes() == (b / "rates.csv").read_bytes()
    assert (a / "rates.json").read_bytes() == (b / "rates.json").read_bytes()


def test_stdout_when_no_out(cfg, capsys):
    assert main(["rates", "--config", cfg, "--quiet"]) == 0
    assert capsys.readouterr().out.startswith("n,m,samples_used")


def test_unknown_flag_exits_one(capsys):
    assert main(["widths", "--bogus"]) == 1
    assert "usage" in capsys.readouterr().err


def test_missing_subcommand_and_bad_config(tmp_path, capsys):
    assert main([]) == 1
    bad = tmp_path / "bad.cfg"
    bad.write_text("no.such.key = 1\n")
    assert main(["widths", "--config", str(bad)]) == 1
    assert main(["widths", "--config", str(tmp_path / "missing.cfg")]) == 1


def test_numerical_failure_exits_two(tmp_path):
    path = tmp_path / "ill.cfg"
    path.write_text(SMALL + "sampling.lambda_floor = 50\n")
    assert main(["recover", "--config", str(path), "--quiet"]) == 2


def test_module_entry_point(cfg):
    res = subprocess.run([sys.executable, "-m", "gpcls", "widths", "--config", cfg],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert json.loads(res.stdout)["xi"] == 32.0
    assert "gpcls widths" in res.stderr
