import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from maxstable_sphere.cli import main
from maxstable_sphere.config import ConfigError, parse_config, parse_config_text

DEFAULT = Path(__file__).resolve().parents[1] / "configs" / "default.toml"
MINIMAL = """
[model]
a = 0.5
theta = 0.3
axis = [0, 0, 1]
kappa = 1.0
[sim]
seed = 42
"""


def test_defaults_filled():
    run = parse_config_text(MINIMAL)
    assert run.sim.grid_n == 4096 and run.verify.gamma == 0.5
    assert run.verify.epsilon == run.verify.delta == 1e-3
    assert run.model.intensity_mode == "exact"
    assert run.chain_config().a == 0.5 and run.sim.seed == 42


def test_continuous_parametrization():
    run = parse_config_text("[model]\nnu = 0.7\nstep = 1.0\nkappa = 1.0\n")
    assert run.chain_config().a == pytest.approx(math.exp(-0.7))
    assert run.chain_config().a == pytest.approx(0.49659, abs=5e-6)


@pytest.mark.parametrize("text,path", [
    ("[model]\na = 1.5\nkappa = 1.0\n", "model.a"),
    ("[model]\na = 0.5\n", "model.kappa"),
    ("[model]\nphi = 0.5\nnu = 0.7\nstep = 1.0\nkappa = 1.0\n", "model"),
    ("[model]\na = 0.5\nkappa = 1.0\ncolour = 3\n", "model.colour"),
    ("[model]\na = 0.5\nkappa = 1.0\n[extra]\nx = 1\n", "extra"),
    ("[model]\na = 0.5\nkappa = 20.0\n", "model.kappa"),
    ("[model]\na = 0.5\nkappa = 1.0\n[sim]\ngrid_n = 0\n", "sim.grid_n"),
])
def test_errors_name_the_key(text, path):
    with pytest.raises(ConfigError, match=path.replace(".", r"\.")):
        parse_config_text(text)


def test_overrides():
    run = parse_config_text(MINIMAL, ["model.a=0.9", "sim.seed=7", "model.intensity_mode=unit"])
    assert run.chain_config().a == 0.9 and run.sim.seed == 7
    assert run.chain_config().rate == 1.0
    run = parse_config_text(MINIMAL, ["model.nu=0.7", "model.step=1.0"])
    assert run.chain_config().a == pytest.approx(math.exp(-0.7))
    with pytest.raises(ConfigError):
        parse_config_text(MINIMAL, ["model.bogus=1"])


def test_parse_file(tmp_path):
    p = tmp_path / "run.toml"
    p.write_text(MINIMAL)
    assert parse_config(p).model.theta == 0.3


def _run(args, capsys=None):
    code = main([str(a) for a in args])
    return code


def test_simulate_innovation_csv(tmp_path):
    out = tmp_path / "z.csv"
    assert _run(["simulate-innovation", "--config", DEFAULT, "--out", out]) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "weight,mu_x,mu_y,mu_z"
    w = [float(r.split(",")[0]) for r in rows[1:]]
    assert all(x > y for x, y in zip(w, w[1:]))


def test_verify_drift_default_config(tmp_path, capsys):
    assert _run(["verify-drift", "--config", DEFAULT, "--out", tmp_path]) == 0
    line = json.loads((tmp_path / "reports.jsonl").read_text())
    assert line["check"] == "drift" and line["pass"] is True
    assert set(line) == {"check", "pass", "params", "estimate", "stderr", "analytic", "n",
                         "seed"}
    assert json.loads(capsys.readouterr().out) == line


def test_failing_check_exits_1(tmp_path, capsys):
    # from h0 = 100 the fitted decay is slower than log(a) + 0.1, so this check fails
    code = _run(["convergence", "--config", DEFAULT, "--out", tmp_path,
                 "--override", "verify.replications=1000", "--override", "verify.horizon=5"])
    err = capsys.readouterr().err
    assert code == 1 and json.loads(err.splitlines()[0])["pass"] is False


def test_usage_errors(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["nonsense", "--config", str(DEFAULT)])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["verify-drift", "--config", str(tmp_path / "missing.toml")])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["verify-drift", "--config", str(DEFAULT), "--override", "model.a=2"])
    assert exc.value.code == 2


def _artifacts(d):
    return {p.name: p.read_bytes() for p in sorted(Path(d).iterdir())}


@pytest.mark.parametrize("cmd", ["simulate-chain", "stationary", "couple"])
def test_byte_identical_reruns(tmp_path, cmd):
    args = ["--config", DEFAULT, "--override", "sim.grid_n=200", "--override", "verify.horizon=5"]
    assert _run([cmd, *args, "--out", tmp_path / "a"]) == 0
    assert _run([cmd, *args, "--out", tmp_path / "b", "--override", "sim.n_jobs=3"]) == 0
    a, b = _artifacts(tmp_path / "a"), _artifacts(tmp_path / "b")
    assert a and a == b


def test_trajectory_csv_format(tmp_path):
    _run(["simulate-chain", "--config", DEFAULT, "--override", "sim.grid_n=50",
          "--override", "verify.horizon=5", "--out", tmp_path])
    lines = (tmp_path / "trajectory.csv").read_text().splitlines()
    assert lines[0] == "t,node_index,x,y,z,value" and len(lines) == 1 + 6 * 50
    vals = np.array([[float(v) for v in r.split(",")] for r in lines[1:]])
    assert np.all(vals[:50, 5] == 1.0) and np.all(vals[:, 5] > 0)


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "maxstable_sphere", "verify-minorization",
                           "--config", str(DEFAULT), "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["check"] == "minorization"
