import json
import os

import numpy as np
import pytest

from nleig.cli import main

TOY_CONFIG = {
    "model": "toy_robin",
    "params": {"alpha": 0.5},
    "n": 256,
    "nonlinearity": "cubic",
    "spectrum": {"targets": [0.2, 0.9]},
    "solver": {"eps": 0.1, "rescale": True},
    "continuation": {"parameter": "eps", "range": [0.0, 0.3],
                     "targets": [0.2], "step": 0.05,
                     "detect_bifurcations": True},
}


def write_config(tmp_path, config, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(config))
    return str(path)


def test_cmd_spectrum(tmp_path, capsys):
    cfg = write_config(tmp_path, TOY_CONFIG)
    out = tmp_path / "out"
    assert main(["spectrum", "--config", cfg, "--out", str(out)]) == 0
    lines = (out / "spectrum.csv").read_text().strip().splitlines()
    assert lines[0].startswith("index,re_mu,im_mu,gap")
    rows = [l.split(",") for l in lines[1:]]
    assert len(rows) == 2
    assert abs(float(rows[0][1]) - 0.25) < 1e-4
    assert abs(float(rows[1][1]) - 1.0) < 1e-4
    assert abs(float(rows[0][2])) <= 1e-8  # im_mu
    assert (out / "eig0.json").exists() and (out / "eig1.json").exists()
    blob = json.loads((out / "eig0.json").read_text())
    assert set(blob) == {"dim", "nodes", "re", "im"}


def test_cmd_solve(tmp_path):
    cfg = write_config(tmp_path, TOY_CONFIG)
    out = tmp_path / "out"
    assert main(["solve", "--config", cfg, "--out", str(out)]) == 0
    result = json.loads((out / "result.json").read_text())
    exact = 0.25 - 0.1 / np.pi
    assert abs(result["mu"]["re"] - exact) < 1e-3  # n=256 discretization
    assert abs(result["mu"]["im"]) <= 1e-9
    assert result["residual"] <= 1e-4
    assert "diagnostics" in result and "psi" in result
    assert "rescaled" in result
    assert abs(result["rescaled"]["eps"] - 0.1) < 1e-2


def test_cmd_solve_eps_zero_echo(tmp_path):
    config = dict(TOY_CONFIG, solver={"eps": 0.0})
    cfg = write_config(tmp_path, config)
    out = tmp_path / "out"
    assert main(["solve", "--config", cfg, "--out", str(out)]) == 0
    result = json.loads((out / "result.json").read_text())
    assert abs(result["mu"]["re"] - 0.25) < 1e-4
    assert result["eps"] == 0.0


def test_cmd_continue_writes_branch_csv(tmp_path):
    cfg = write_config(tmp_path, TOY_CONFIG)
    out = tmp_path / "out"
    assert main(["continue", "--config", cfg, "--out", str(out)]) == 0
    lines = (out / "branches.csv").read_text().strip().splitlines()
    from nleig.io import BRANCH_CSV_HEADER
    assert lines[0] == BRANCH_CSV_HEADER
    rows = [l.split(",") for l in lines[1:]]
    assert all(len(r) in (16, 17) for r in rows)
    data = [r for r in rows if len(r) == 16]
    assert len(data) >= 5
    eps = np.array([float(r[4]) for r in data])
    re_mu = np.array([float(r[6]) for r in data])
    slope = np.polyfit(eps, re_mu, 1)[0]
    assert abs(slope + 1 / np.pi) < 1e-3
    assert all(abs(float(r[7])) <= 1e-10 for r in data)  # im_mu
    snapshots = [f for f in os.listdir(out) if f.startswith("branch1_pt")]
    assert snapshots


def test_cli_determinism(tmp_path):
    cfg = write_config(tmp_path, TOY_CONFIG)
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert main(["continue", "--config", cfg, "--out", str(out1), "--seed", "3"]) == 0
    assert main(["continue", "--config", cfg, "--out", str(out2), "--seed", "3"]) == 0
    assert (out1 / "branches.csv").read_bytes() == (out2 / "branches.csv").read_bytes()


def test_cli_jobs_parallel_matches_serial(tmp_path):
    config = dict(TOY_CONFIG,
                  continuation=dict(TOY_CONFIG["continuation"],
                                    targets=[0.2, 0.9]))
    cfg = write_config(tmp_path, config)
    out1, out2 = tmp_path / "s", tmp_path / "p"
    assert main(["continue", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["continue", "--config", cfg, "--out", str(out2),
                 "--jobs", "2"]) == 0
    assert (out1 / "branches.csv").read_bytes() == (out2 / "branches.csv").read_bytes()


def test_cli_config_error_exit_code(tmp_path):
    cfg = write_config(tmp_path, {"params": {}})
    out = tmp_path / "out"
    assert main(["spectrum", "--config", cfg, "--out", str(out)]) == 2
    err = json.loads((out / "error.json").read_text())
    assert set(err) == {"code", "module", "message", "context"}


def test_cli_missing_config_file(tmp_path):
    out = tmp_path / "out"
    assert main(["solve", "--config", str(tmp_path / "nope.json"),
                 "--out", str(out)]) == 2


def test_cli_numerical_error_exit_code(tmp_path):
    # targeting a degenerate eigenvalue pair is a numerical failure (3)
    config = {"model": "sho6_2d", "params": {"gamma": 0.0}, "n": 31,
              "spectrum": {"targets": [2 * np.sqrt(2)]}}
    cfg = write_config(tmp_path, config)
    out = tmp_path / "out"
    assert main(["spectrum", "--config", cfg, "--out", str(out)]) == 3
    err = json.loads((out / "error.json").read_text())
    assert err["code"] == "non_simple"


def test_cli_no_contraction_exit(tmp_path):
    config = dict(TOY_CONFIG, solver={"eps": 40.0})
    cfg = write_config(tmp_path, config)
    out = tmp_path / "out"
    assert main(["solve", "--config", cfg, "--out", str(out)]) == 3
    err = json.loads((out / "error.json").read_text())
    assert err["code"] == "no_contraction"


def test_cmd_spectrum_dnls_matches_formula(tmp_path):
    # gamma = 0.5 > the N=3 realness window: the top pair is imaginary and
    # is targeted with [re, im] pairs
    from nleig.models import dnls_exact_spectrum
    exact = dnls_exact_spectrum(3, 0.5)
    config = {"model": "dnls", "params": {"N": 3, "gamma": 0.5},
              "spectrum": {"targets": [[z.real, z.imag] for z in exact]}}
    cfg = write_config(tmp_path, config)
    out = tmp_path / "out"
    assert main(["spectrum", "--config", cfg, "--out", str(out)]) == 0
    lines = (out / "spectrum.csv").read_text().strip().splitlines()
    rows = [l.split(",") for l in lines[1:]]
    assert len(rows) == 6
    for row, z in zip(rows, exact):
        assert abs(complex(float(row[1]), float(row[2])) - z) <= 1e-12


def test_cmd_continue_collision_pair_marker(tmp_path):
    # dnls N=1: the two branches collide at gamma = 1; the collision marker
    # is appended to the first branch's rows
    config = {"model": "dnls", "params": {"N": 1, "gamma": 0.2},
              "continuation": {"parameter": "gamma", "range": [0.2, 1.2],
                               "targets": [[0.9797958971132712, 0],
                                           [-0.9797958971132712, 0]],
                               "step": 0.05, "min_step": 1e-6,
                               "complex_mu_allowed": False,
                               "collision_pair": True}}
    cfg = write_config(tmp_path, config)
    out = tmp_path / "out"
    code = main(["continue", "--config", cfg, "--out", str(out)])
    assert code == 4  # both branches stall at the collision: partial output
    rows = [l.split(",") for l in
            (out / "branches.csv").read_text().strip().splitlines()[1:]]
    markers = [r for r in rows if len(r) == 17 and r[16] == "1"]
    assert len(markers) == 1
    assert 0.95 <= float(markers[0][3]) <= 1.05


def test_cmd_solve_spec_precision(tmp_path):
    config = dict(TOY_CONFIG, n=2048, solver={"eps": 0.1})
    cfg = write_config(tmp_path, config)
    out = tmp_path / "out"
    assert main(["solve", "--config", cfg, "--out", str(out)]) == 0
    result = json.loads((out / "result.json").read_text())
    assert abs(result["mu"]["re"] - (0.25 - 0.1 / np.pi)) <= 2e-5


def test_cmd_continue_gamma_at_fixed_eps(tmp_path):
    config = {"model": "dnls", "params": {"N": 2, "gamma": 0.1},
              "continuation": {"parameter": "gamma", "range": [0.1, 0.4],
                               "targets": [-1.7], "eps": 0.05,
                               "step": 0.05}}
    cfg = write_config(tmp_path, config)
    out = tmp_path / "out"
    assert main(["continue", "--config", cfg, "--out", str(out)]) == 0
    rows = [l.split(",") for l in
            (out / "branches.csv").read_text().strip().splitlines()[1:]]
    data = [r for r in rows if len(r) == 16]
    assert all(r[2] == "gamma" for r in data)
    assert all(abs(float(r[4]) - 0.05) < 1e-15 for r in data)  # eps fixed
    gammas = [float(r[3]) for r in data]
    assert gammas == sorted(gammas) and abs(gammas[-1] - 0.4) < 1e-10
