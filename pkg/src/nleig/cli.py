"""Command-line entry points.

    nleig spectrum --config cfg.json --out DIR [--seed N]
    nleig solve    --config cfg.json --out DIR [--seed N]
    nleig continue --config cfg.json --out DIR [--seed N] [--jobs N]

The JSON config holds a model block at the top level plus optional
"nonlinearity", "solver", "spectrum" and "continuation" blocks, e.g.

    {"model": "toy_robin", "params": {"alpha": 0.5}, "n": 2048,
     "nonlinearity": "cubic",
     "spectrum": {"targets": [0.2]},
     "solver": {"eps": 0.1, "rescale": true},
     "continuation": {"parameter": "eps", "range": [0.0, 0.5],
                      "targets": [0.2], "step": 0.05,
                      "detect_bifurcations": true}}

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 partial
(some branches failed; their completed points are still written).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import io as nio
from .continuation import (Branch, ContinuationConfig, continue_branch,
                           detect_bifurcation, locate_collision, seed_point,
                           switch_branch)
from .core import grid_function_to_json
from .errors import ConfigError, NleigError, StepUnderflow
from .ls_solver import LSConfig, ls_solve, rescale_unit_norm
from .models import ModelSpec, build_model
from .spectra import compute_eigentriple, symmetrize_eigenvector
from .symmetry import solution_symmetry_residual

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_PARTIAL = 4


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc


def _model_spec(config: dict) -> ModelSpec:
    if "model" not in config:
        raise ConfigError("config must name a model")
    return ModelSpec(
        name=config["model"],
        params=dict(config.get("params", {})),
        n=config.get("n"),
        half_width=config.get("half_width"),
        nonlinearity=config.get("nonlinearity"),
        symmetric_grid=config.get("symmetric_grid", True),
    )


def _parse_target(value) -> complex:
    """Targets are numbers, [re, im] pairs, or {"re":…, "im":…} objects."""
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, dict) and "re" in value:
        return complex(float(value["re"]), float(value.get("im", 0.0)))
    raise ConfigError(f"cannot parse spectrum target {value!r}")


def _triple_near(problem, target, seed):
    triple = compute_eigentriple(problem, target, seed=seed)
    if abs(triple.mu0.imag) <= 1e-9 * (1 + abs(triple.mu0)):
        for op in problem.antilinear_symmetries:
            triple = symmetrize_eigenvector(triple, op,
                                            phase_node=problem.phase_node)
            break
    return triple


def _sym_residual_map(problem, psi):
    out = {}
    for op in problem.symmetries:
        if op.conjugate:
            out[op.name] = {"residual": solution_symmetry_residual(op, psi, +1),
                            "sign": None}
        else:
            rp = solution_symmetry_residual(op, psi, +1)
            rm = solution_symmetry_residual(op, psi, -1)
            out[op.name] = {"residual": min(rp, rm),
                            "sign": 1 if rp <= rm else -1}
    return out


def cmd_spectrum(config: dict, out_dir: str, seed: int) -> int:
    problem = build_model(_model_spec(config))
    block = config.get("spectrum", {})
    targets = block.get("targets")
    if not targets:
        raise ConfigError("spectrum command needs spectrum.targets")
    lines = ["index,re_mu,im_mu,gap,sym_PT,sym_P1T,sym_P2T,sym_lin,sym_lin_sign"]
    for k, target in enumerate(targets):
        triple = _triple_near(problem, _parse_target(target), seed)
        sym = nio.symmetry_fields(_sym_residual_map(problem, triple.psi0))
        lines.append(",".join([
            str(k), nio._fmt(triple.mu0.real), nio._fmt(triple.mu0.imag),
            nio._fmt(triple.gap), *sym]))
        nio.atomic_write_text(
            os.path.join(out_dir, f"eig{k}.json"),
            json.dumps(grid_function_to_json(triple.psi0)))
    nio.atomic_write_text(os.path.join(out_dir, "spectrum.csv"),
                          "\n".join(lines) + "\n")
    print(f"wrote {len(targets)} eigentriples to {out_dir}")
    return EXIT_OK


def cmd_solve(config: dict, out_dir: str, seed: int) -> int:
    problem = build_model(_model_spec(config))
    block = dict(config.get("solver", {}))
    rescale = block.pop("rescale", False)
    target = block.pop("target", None)
    if target is None:
        spec_block = config.get("spectrum", {})
        targets = spec_block.get("targets") or []
        if not targets:
            raise ConfigError("solve needs solver.target or spectrum.targets")
        target = targets[0]
    cfg = LSConfig(**block)
    triple = _triple_near(problem, _parse_target(target), seed)
    result = ls_solve(problem, triple, cfg)
    payload = nio.ls_result_to_json(result)
    if rescale:
        eps_t, mu_t, psi_t = rescale_unit_norm(problem, result)
        payload["rescaled"] = {
            "eps": eps_t,
            "mu": {"re": mu_t.real, "im": mu_t.imag},
            "psi": grid_function_to_json(psi_t),
        }
    nio.atomic_write_text(os.path.join(out_dir, "result.json"),
                          json.dumps(payload))
    print(f"eps={result.eps}: mu = {result.mu.real:.12g} "
          f"{result.mu.imag:+.3e}i, residual {result.residual:.2e}")
    return EXIT_OK


def _continuation_config(block: dict) -> ContinuationConfig:
    keys = ("mode", "step", "min_step", "max_step", "max_steps", "newton_tol",
            "max_newton", "detect_bifurcations", "complex_mu_allowed")
    return ContinuationConfig(**{k: block[k] for k in keys if k in block})


def _run_one_branch(args):
    """Worker: continue one branch from one spectrum target (picklable)."""
    config, target, branch_id, seed = args
    problem = build_model(_model_spec(config))
    block = config.get("continuation", {})
    cfg = _continuation_config(block)
    param = block.get("parameter", "eps")
    lo, hi = block.get("range", [0.0, 0.5])
    triple = _triple_near(problem, _parse_target(target), seed)
    eps0 = lo if param == "eps" else block.get("eps", 0.0)
    start = seed_point(problem, triple.psi0, triple.mu0, eps=eps0)
    status = "ok"
    try:
        branch = continue_branch(problem, start, cfg, param, hi,
                                 branch_id=branch_id)
    except StepUnderflow as exc:
        branch = exc.branch
        status = "step_underflow"
    children = []
    if block.get("switch_branches") and branch.bifurcation_markers:
        for j, marker in enumerate(branch.bifurcation_markers):
            try:
                children.append(switch_branch(problem, branch, marker, cfg,
                                              param_target=hi,
                                              child_id=f"{branch_id}b{j}"))
            except NleigError:
                pass
    return branch, children, status


def cmd_continue(config: dict, out_dir: str, seed: int, jobs: int = 1) -> int:
    block = config.get("continuation", {})
    targets = block.get("targets") or config.get("spectrum", {}).get("targets")
    if not targets:
        raise ConfigError("continue needs continuation.targets or spectrum.targets")
    work = [(config, t, str(k + 1), seed) for k, t in enumerate(targets)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_one_branch, work))
    else:
        outcomes = [_run_one_branch(w) for w in work]

    branches = []
    any_failed = False
    for branch, children, status in outcomes:
        branches.append(branch)
        branches.extend(children)
        any_failed = any_failed or status != "ok"

    if block.get("collision_pair") and len(branches) >= 2:
        try:
            marker = locate_collision(branches[0], branches[1])
            branches[0].bifurcation_markers.append(marker)
        except NleigError as exc:
            print(f"collision location failed: {exc}", file=sys.stderr)

    nio.write_branch_csv(branches, os.path.join(out_dir, "branches.csv"))
    for branch in branches:
        nio.write_branch_snapshots(branch, out_dir)

    print("branch  parent  range_reached            markers  max|Im mu|")
    for b in branches:
        params = b.parameters()
        immax = float(np.max(np.abs(b.mus().imag))) if len(b.points) else 0.0
        rng = f"[{params.min():.4g}, {params.max():.4g}]" if len(params) else "-"
        print(f"{b.branch_id:>6}  {b.parent_id or '-':>6}  {rng:<22}  "
              f"{len(b.bifurcation_markers):>7}  {immax:.2e}")
    return EXIT_PARTIAL if any_failed else EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nleig",
        description="nonlinear eigenvalue bifurcation for discretized problems",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("spectrum", "solve", "continue"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True)
        sp.add_argument("--out", required=True)
        sp.add_argument("--seed", type=int, default=0)
        if name == "continue":
            sp.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args(argv)

    os.makedirs(args.out, exist_ok=True)
    try:
        config = _load_config(args.config)
        if args.command == "spectrum":
            return cmd_spectrum(config, args.out, args.seed)
        if args.command == "solve":
            return cmd_solve(config, args.out, args.seed)
        return cmd_continue(config, args.out, args.seed,
                            jobs=getattr(args, "jobs", 1))
    except ConfigError as exc:
        _write_error(args.out, exc)
        return EXIT_CONFIG
    except NleigError as exc:
        _write_error(args.out, exc)
        return EXIT_NUMERICAL


def _write_error(out_dir: str, exc: Exception):
    try:
        nio.atomic_write_text(os.path.join(out_dir, "error.json"),
                              json.dumps(nio.error_json(exc)))
    except OSError:
        pass
    print(f"error: {exc}", file=sys.stderr)


if __name__ == "__main__":
    raise SystemExit(main())
