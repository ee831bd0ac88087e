"""File interfaces: branch CSV, LSResult JSON, snapshots, error JSON.

The branch CSV header is fixed:

branch_id,parent_id,param_name,param_value,eps,gamma,re_mu,im_mu,norm_psi,newton_residual,sv_min,sym_PT,sym_P1T,sym_P2T,sym_lin,sym_lin_sign

One row per accepted point; missing symmetries stay empty.  Bifurcation
markers are separate rows carrying branch_id/parent_id/param_name/
param_value plus a trailing marker=1 field appended after the 16 columns.
Floats are printed with 17 significant digits (round-trip exact), so equal
inputs produce byte-identical files.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .core import grid_function_to_json

BRANCH_CSV_HEADER = ("branch_id,parent_id,param_name,param_value,eps,gamma,"
                     "re_mu,im_mu,norm_psi,newton_residual,sv_min,"
                     "sym_PT,sym_P1T,sym_P2T,sym_lin,sym_lin_sign")

_ANTILINEAR_COLUMNS = {"PT": "sym_PT", "lattice-PT": "sym_PT",
                       "P1T": "sym_P1T", "P2T": "sym_P2T"}


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float) and not np.isfinite(x):
        return ""
    return f"{float(x):.17g}"


def symmetry_fields(symmetry_residuals: dict):
    """(sym_PT, sym_P1T, sym_P2T, sym_lin, sym_lin_sign) as CSV strings."""
    cols = {"sym_PT": "", "sym_P1T": "", "sym_P2T": "", "sym_lin": "",
            "sym_lin_sign": ""}
    for name, entry in symmetry_residuals.items():
        if name in _ANTILINEAR_COLUMNS:
            cols[_ANTILINEAR_COLUMNS[name]] = _fmt(entry["residual"])
        elif entry.get("sign") is not None:
            cols["sym_lin"] = _fmt(entry["residual"])
            cols["sym_lin_sign"] = str(int(entry["sign"]))
    return (cols["sym_PT"], cols["sym_P1T"], cols["sym_P2T"],
            cols["sym_lin"], cols["sym_lin_sign"])


def branch_csv_lines(branches) -> list:
    lines = [BRANCH_CSV_HEADER]
    for branch in branches:
        parent = branch.parent_id or ""
        for pt in branch.points:
            sym = symmetry_fields(pt.symmetry_residuals)
            lines.append(",".join([
                str(branch.branch_id), parent, branch.parameter_name,
                _fmt(pt.parameter(branch.parameter_name)),
                _fmt(pt.eps), _fmt(pt.gamma),
                _fmt(pt.mu.real), _fmt(pt.mu.imag),
                _fmt(pt.psi.norm()), _fmt(pt.newton_residual),
                _fmt(pt.stability_indicator), *sym,
            ]))
        for marker in branch.bifurcation_markers:
            lines.append(",".join([
                str(branch.branch_id), parent, branch.parameter_name,
                _fmt(marker)] + [""] * 12 + ["1"]))
    return lines


def atomic_write_text(path: str, text: str):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def write_branch_csv(branches, path: str):
    atomic_write_text(path, "\n".join(branch_csv_lines(branches)) + "\n")


def write_branch_snapshots(branch, out_dir: str):
    """GridFunction JSONs at labeled points: first, last, nearest-to-marker."""
    labeled = {0, len(branch.points) - 1}
    params = branch.parameters()
    for marker in branch.bifurcation_markers:
        labeled.add(int(np.argmin(np.abs(params - marker))))
    written = []
    for k in sorted(labeled):
        pt = branch.points[k]
        path = os.path.join(out_dir, f"branch{branch.branch_id}_pt{k}.json")
        atomic_write_text(path, json.dumps(grid_function_to_json(pt.psi)))
        written.append(path)
    return written


def _c2d(z) -> dict:
    return {"re": float(np.real(z)), "im": float(np.imag(z))}


def ls_result_to_json(result) -> dict:
    d = result.diagnostics
    return {
        "eps": float(result.eps),
        "mu": _c2d(result.mu),
        "nu": _c2d(result.nu),
        "sigma": _c2d(result.sigma),
        "residual": float(result.residual),
        "constraint_residual": float(result.constraint_residual),
        "diagnostics": {
            "r1_bound": d.r1_bound,
            "r2_bound": d.r2_bound,
            "norm_P0": d.norm_P0,
            "norm_Q0": d.norm_Q0,
            "L_estimate": d.L_estimate,
            "phi_norm": d.phi_norm,
            "inner_iterations": d.inner_iterations,
            "outer_iterations": d.outer_iterations,
            "final_chi_norm": d.final_chi_norm,
            "final_sigma_abs": d.final_sigma_abs,
        },
        "psi": grid_function_to_json(result.psi),
        "phi": grid_function_to_json(result.phi),
        "chi": grid_function_to_json(result.chi),
    }


def error_json(exc) -> dict:
    return {
        "code": getattr(exc, "code", "error"),
        "module": getattr(exc, "module", "nleig"),
        "message": str(exc),
        "context": {"type": type(exc).__name__},
    }
