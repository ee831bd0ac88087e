"""Antilinear and linear grid symmetries and their residual checks.

A symmetry is an exact node permutation, optionally composed with complex
conjugation (antilinear).  Permutations are involutions and leave the
quadrature weights invariant, which makes the antilinear ops isometric
(<Cu, Cv> = <v, u>) and the linear ops selfadjoint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Grid, GridFunction, SparseOperator, apply, inner_product
from .errors import GridMismatch


@dataclass(frozen=True)
class SymmetryOp:
    """Node permutation with optional conjugation.

    expected_sign classifies linear symmetries (+1 symmetric, -1
    antisymmetric); it stays None for antilinear ops and for linear ops
    whose sign is determined per eigenvector.
    """

    permutation: np.ndarray
    conjugate: bool
    name: str
    expected_sign: int | None = None

    def __post_init__(self):
        perm = np.asarray(self.permutation, dtype=int)
        if not np.array_equal(perm[perm], np.arange(len(perm))):
            raise GridMismatch(f"symmetry {self.name!r}: permutation is not an involution")
        perm.setflags(write=False)
        object.__setattr__(self, "permutation", perm)

    @property
    def antilinear(self) -> bool:
        return self.conjugate


def from_reflection(grid: Grid, map_name: str, conjugate: bool, name: str,
                    expected_sign: int | None = None) -> SymmetryOp:
    """Build a SymmetryOp from one of the grid's named reflection maps."""
    if map_name not in grid.reflection_maps:
        raise GridMismatch(f"grid has no reflection map {map_name!r}")
    perm = grid.reflection_maps[map_name]
    if not np.allclose(grid.weights[perm], grid.weights, rtol=1e-14, atol=0.0):
        raise GridMismatch(f"weights not invariant under reflection {map_name!r}")
    return SymmetryOp(perm, conjugate, name, expected_sign)


def apply_symmetry(op: SymmetryOp, u: GridFunction) -> GridFunction:
    """(op u)_i = conj(u_{perm(i)}) for antilinear ops, u_{perm(i)} otherwise."""
    if len(op.permutation) != u.grid.size:
        raise GridMismatch("symmetry permutation does not match the grid")
    vals = u.values[op.permutation]
    if op.conjugate:
        vals = np.conj(vals)
    return GridFunction(u.grid, vals)


def _probe_vectors(grid: Grid, count: int, seed: int, amplitude: float = 1.0):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        re = rng.standard_normal(grid.size)
        im = rng.standard_normal(grid.size)
        yield GridFunction(grid, amplitude * (re + 1j * im))


def operator_commutation_residual(op: SymmetryOp, aop: SparseOperator,
                                  probes: int = 32, seed: int = 0) -> float:
    """max over seeded probes of ||A(op u) - op(A u)|| / ||u||, / ||A||_1.

    The returned value is already normalized by the operator 1-norm, so the
    commutation gate for declared symmetries is residual <= 1e-10.
    """
    if len(op.permutation) != aop.grid.size:
        raise GridMismatch("symmetry permutation does not match the operator grid")
    a1 = aop.norm_1()
    worst = 0.0
    for u in _probe_vectors(aop.grid, probes, seed):
        lhs = apply(aop, apply_symmetry(op, u))
        rhs = apply_symmetry(op, apply(aop, u))
        worst = max(worst, (lhs - rhs).norm() / u.norm())
    return worst / a1


def nonlinearity_equivariance_residual(op: SymmetryOp, spec, probes: int = 32,
                                       seed: int = 0, grid: Grid | None = None) -> float:
    """max over seeded probes of ||op f(u) - f(op u)|| / (1 + ||f(u)||)."""
    from .nonlinearity import eval_f  # late import avoids a module cycle

    if grid is None:
        raise GridMismatch("a grid is required to draw probe vectors")
    worst = 0.0
    for u in _probe_vectors(grid, probes, seed, amplitude=2.0):
        fu = eval_f(spec, u)
        lhs = apply_symmetry(op, fu)
        rhs = eval_f(spec, apply_symmetry(op, u))
        worst = max(worst, (lhs - rhs).norm() / (1.0 + fu.norm()))
    return worst


def solution_symmetry_residual(op: SymmetryOp, psi: GridFunction, sign: int = 1) -> float:
    """||op psi - sign * psi|| / ||psi||."""
    n = psi.norm()
    if n == 0.0:
        return 0.0
    return (apply_symmetry(op, psi) - sign * psi).norm() / n


def antilinear_isometry_residual(op: SymmetryOp, grid: Grid, probes: int = 16,
                                 seed: int = 1) -> float:
    """Defining-identity residual over seeded probe pairs.

    Antilinear ops are checked against <Cu, Cv> = <v, u>, linear ops against
    selfadjointness <Su, v> = <u, Sv>; both hold to rounding by construction.
    """
    vs = list(_probe_vectors(grid, 2 * probes, seed))
    worst = 0.0
    for u, v in zip(vs[:probes], vs[probes:]):
        if op.conjugate:
            lhs = inner_product(apply_symmetry(op, u), apply_symmetry(op, v))
            ref = inner_product(v, u)
        else:
            lhs = inner_product(apply_symmetry(op, u), v)
            ref = inner_product(u, apply_symmetry(op, v))
        worst = max(worst, abs(lhs - ref) / (u.norm() * v.norm()))
    return worst
