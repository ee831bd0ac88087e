#!/usr/bin/env python3
"""Regenerate the frontend test fixtures from the primary CLI.

Produces, under frontend/test/fixtures/:
  sho6_gamma2_branches.csv  four-branch eps-continuation of the gamma=2
                            oscillator model at 81^2 with the detected
                            secondary-bifurcation marker and its child branch
  toy_ground_psi.json       toy ground-state snapshot (constant modulus)
  sho6_mode1_psi.json       2D first-mode snapshot at 41^2

Takes a few minutes (dominated by the 81^2 continuation runs).
"""

import json
import pathlib
import shutil
import subprocess
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "frontend" / "test" / "fixtures"

SHO6 = {
    "model": "sho6_2d", "params": {"gamma": 2.0}, "n": 81,
    "nonlinearity": "cubic",
    "continuation": {"parameter": "eps", "range": [0.0, 5.0],
                     "targets": [2.0, 2.6, 3.2, 4.3],
                     "step": 0.25, "max_step": 0.35,
                     "detect_bifurcations": True, "switch_branches": True},
}

TOY = {"model": "toy_robin", "params": {"alpha": 0.5}, "n": 257,
       "spectrum": {"targets": [0.25]}}

SHO6_SNAP = {"model": "sho6_2d", "params": {"gamma": 2.0}, "n": 41,
             "spectrum": {"targets": [2.0]}}


def run(command, config, out):
    cfg = out / "config.json"
    cfg.write_text(json.dumps(config))
    subprocess.run([sys.executable, "-m", "nleig.cli", command,
                    "--config", str(cfg), "--out", str(out)], check=True)


def main():
    FIXTURES.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        tmp = pathlib.Path(tmp)
        for name, cmd, config, src, dst in [
            ("sho6", "continue", SHO6, "branches.csv", "sho6_gamma2_branches.csv"),
            ("toy", "spectrum", TOY, "eig0.json", "toy_ground_psi.json"),
            ("snap", "spectrum", SHO6_SNAP, "eig0.json", "sho6_mode1_psi.json"),
        ]:
            out = tmp / name
            out.mkdir()
            run(cmd, config, out)
            shutil.copy(out / src, FIXTURES / dst)
            print(f"wrote {FIXTURES / dst}")


if __name__ == "__main__":
    main()
