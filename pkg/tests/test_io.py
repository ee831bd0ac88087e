import json
import os

import numpy as np

from nleig.continuation import Branch, BranchPoint
from nleig.core import GridFunction, uniform_grid_1d
from nleig.io import (BRANCH_CSV_HEADER, atomic_write_text, branch_csv_lines,
                      error_json, symmetry_fields, write_branch_snapshots)


def _point(grid, eps, mu, residuals):
    return BranchPoint(eps=eps, gamma=0.3, mu=mu,
                       psi=GridFunction(grid, np.ones(grid.size) / np.sqrt(grid.measure)),
                       newton_residual=1e-12,
                       symmetry_residuals=residuals,
                       stability_indicator=0.05, phase_node=0)


def _branch(grid):
    residuals = {"lattice-PT": {"residual": 1e-13, "sign": None},
                 "P2": {"residual": 2e-13, "sign": -1}}
    branch = Branch(branch_id="7", parent_id="2", parameter_name="eps",
                    norm_a1=10.0)
    branch.points = [_point(grid, 0.0, 1.5 + 0j, residuals),
                     _point(grid, 0.1, 1.45 + 1e-12j, residuals)]
    branch.bifurcation_markers = [0.05]
    return branch


def test_symmetry_fields_column_mapping():
    fields = symmetry_fields({"lattice-PT": {"residual": 1e-13, "sign": None},
                              "P2": {"residual": 2e-13, "sign": -1}})
    sym_pt, sym_p1t, sym_p2t, sym_lin, sym_lin_sign = fields
    assert sym_pt != "" and sym_p1t == "" and sym_p2t == ""
    assert sym_lin != "" and sym_lin_sign == "-1"


def test_branch_csv_shape_and_roundtrip_floats():
    grid = uniform_grid_1d(1.0, 32, "robin")
    lines = branch_csv_lines([_branch(grid)])
    assert lines[0] == BRANCH_CSV_HEADER
    data = [l.split(",") for l in lines[1:]]
    assert [len(r) for r in data] == [16, 16, 17]
    assert data[2][-1] == "1"  # marker row
    # 17-significant-digit floats round-trip exactly
    assert float(data[0][6]) == 1.5
    assert float(data[1][3]) == 0.1


def test_snapshots_cover_first_last_and_marker(tmp_path):
    grid = uniform_grid_1d(1.0, 32, "robin")
    written = write_branch_snapshots(_branch(grid), str(tmp_path))
    names = sorted(os.path.basename(p) for p in written)
    assert names == ["branch7_pt0.json", "branch7_pt1.json"]
    blob = json.loads(open(written[0]).read())
    assert set(blob) == {"dim", "nodes", "re", "im"}


def test_atomic_write_replaces(tmp_path):
    path = tmp_path / "x.csv"
    atomic_write_text(str(path), "one")
    atomic_write_text(str(path), "two")
    assert path.read_text() == "two"
    assert list(tmp_path.iterdir()) == [path]


def test_error_json_fields():
    from nleig.errors import NoContraction
    blob = error_json(NoContraction("ratio too large", ratio=0.99, loop="chi"))
    assert blob["code"] == "no_contraction"
    assert blob["module"] == "ls_solver"
    assert "ratio" in blob["message"] or blob["message"]
    assert blob["context"]["type"] == "NoContraction"
