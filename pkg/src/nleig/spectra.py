"""Eigentriples (mu0, psi0, psi0*), rank-one spectral projectors, symmetrization.

The right and left eigenvectors are computed by shifted inverse iteration
with Rayleigh-quotient refinement (all in the weighted inner product) and
normalized to

    ||psi0|| = 1,   <psi0, psi0*> = 1.

Simplicity is verified by a deflated second run: the nearest other
eigenvalue must keep its distance, which also yields the spectral gap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .core import GridFunction, SparseOperator, adjoint, apply, inner_product, _factorize
from .errors import (DefectivePair, NleigError, NonRealEigenvalue, NonSimple,
                     NoConvergence, SingularSystem)
from .symmetry import SymmetryOp, apply_symmetry, _probe_vectors

_EIG_TOL_SCALE = 1e-11
_SIMPLE_TOL = 1e-6
_DEFECTIVE_TOL = 1e-8


@dataclass(frozen=True)
class EigenTriple:
    """Simple isolated eigenvalue with biorthogonally normalized vectors."""

    mu0: complex
    psi0: GridFunction
    psi0_star: GridFunction
    gap: float

    def normalization_residuals(self):
        return (abs(self.psi0.norm() - 1.0),
                abs(inner_product(self.psi0, self.psi0_star) - 1.0))


@dataclass(frozen=True)
class SpectralProjector:
    """Rank-one Riesz projector P0 u = <u, psi0*> psi0 and its complement."""

    triple: EigenTriple


def _weighted_normalize(vals, weights):
    n = np.sqrt(np.sum(weights * np.abs(vals) ** 2))
    return vals / n


def _rayleigh(mat, vals, weights):
    av = mat @ vals
    return complex(np.sum(weights * av * np.conj(vals))
                   / np.sum(weights * vals * np.conj(vals))), av


def _shifted_lu(mat, shift, dim):
    for nudge in (0.0, 1e-10, 1e-8, 1e-6):
        try:
            return _factorize(mat - (shift + nudge * (1 + abs(shift)))
                              * sp.identity(dim, format="csr"),
                              check_singular=False)
        except SingularSystem:
            continue
    raise SingularSystem(f"could not factorize at shift {shift}")


def _inverse_iteration(mat, weights, target, tol_abs, deflate=None,
                       max_rounds=24, fixed_steps=6, seed=0):
    """Inverse iteration + Rayleigh refinement; returns (mu, vals, residual).

    ``deflate`` is an optional callable projecting the iterate onto the
    complement of an already-computed eigenvector.  The shift stays at
    ``target`` for ``fixed_steps`` rounds (one factorization), then follows
    the Rayleigh quotient.  Iteration continues past the tolerance while
    the residual keeps improving and stops at genuine stagnation.
    """
    m = mat.shape[0]
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    if deflate is not None:
        v = deflate(v)
    v = _weighted_normalize(v, weights)
    lu = _shifted_lu(mat, target, m)
    shift = target
    best = (None, None, np.inf)
    stalls = 0
    for round_ in range(max_rounds):
        v = lu.solve(v)
        if deflate is not None:
            v = deflate(v)
        v = _weighted_normalize(v, weights)
        mu, av = _rayleigh(mat, v, weights)
        res = float(np.sqrt(np.sum(weights * np.abs(av - mu * v) ** 2)))
        improving = res < 0.99 * best[2]
        if res < best[2]:
            best = (mu, v.copy(), res)
        if best[2] <= tol_abs and (not improving or best[2] <= tol_abs * 1e-3):
            break
        stalls = 0 if improving else stalls + 1
        if stalls >= 6:
            break
        if round_ + 1 >= fixed_steps:
            shift = mu
            lu = _shifted_lu(mat, shift, m)
    mu, v, res = best
    if mu is None or res > tol_abs:
        raise NoConvergence(
            f"inverse iteration stalled at residual {res:.2e} (tol {tol_abs:.2e})"
        )
    return mu, v, res


def compute_eigentriple(problem, target: complex, seed: int = 0) -> EigenTriple:
    """Eigentriple of the problem operator near ``target``.

    Runs shifted inverse iteration on A and its weighted adjoint, enforces
    the normalization ||psi0|| = 1, <psi0, psi0*> = 1, and verifies
    simplicity by a deflated second run (the deflated eigenvalue must differ
    from mu0 by more than 1e-6 * (1 + |mu0|), which also provides the gap).
    """
    aop = problem.operator
    grid = problem.grid
    w = grid.weights
    tol_abs = _EIG_TOL_SCALE * problem.norm_a1

    mu0, v, _ = _inverse_iteration(aop.matrix, w, target, tol_abs, seed=seed)

    # deterministic phase: Im psi0(x0) = 0, Re psi0(x0) > 0
    i0 = problem.phase_node
    anchor = v[i0]
    if abs(anchor) < 1e-12 * np.max(np.abs(v)):
        anchor = v[int(np.argmax(np.abs(v)))]
    v = v * (np.conj(anchor) / abs(anchor))
    psi0 = GridFunction(grid, v)

    astar = adjoint(aop)
    mu_left, vstar, _ = _inverse_iteration(astar.matrix, w, np.conj(mu0),
                                           tol_abs, seed=seed + 1)
    overlap = complex(np.sum(w * v * np.conj(vstar)))
    if abs(overlap) < _DEFECTIVE_TOL:
        raise DefectivePair(
            f"|<psi0, psi0*>| = {abs(overlap):.2e} before scaling: near-Jordan pair"
        )
    psi0_star = GridFunction(grid, vstar / np.conj(overlap))

    # biorthogonal Rayleigh quotient <A psi0, psi0*>: the first-order error
    # of the one-sided quotient cancels, which matters for realness checks
    mu0 = complex(np.sum(w * (aop.matrix @ v) * np.conj(psi0_star.values)))

    # deflated second run: simplicity check and spectral gap; the shift is
    # kept away from mu0 itself so the deflated directions stay clean
    def deflate(x):
        return x - np.sum(w * x * np.conj(psi0_star.values)) * psi0.values

    shift_defl = target
    if abs(complex(target) - mu0) <= 1e-6 * (1 + abs(mu0)):
        shift_defl = mu0 + 1e-3 * (1 + abs(mu0))
    try:
        mu_second, _, _ = _inverse_iteration(
            aop.matrix, w, shift_defl, max(tol_abs, 1e-8 * (1 + abs(mu0))),
            deflate=deflate, seed=seed + 2, max_rounds=40)
    except NoConvergence as exc:
        raise NonSimple(f"deflated run failed to separate a second eigenvalue: {exc}")
    gap = abs(mu_second - mu0)
    if gap <= _SIMPLE_TOL * (1 + abs(mu0)):
        raise NonSimple(
            f"eigenvalue near {mu0:.6g} is not simple: deflated neighbor at "
            f"distance {gap:.2e}"
        )
    triple = EigenTriple(complex(mu0), psi0, psi0_star, float(gap))
    _validate_triple(problem, triple, tol_abs)
    return triple


def _validate_triple(problem, triple: EigenTriple, tol_abs: float):
    rnorm, rbi = triple.normalization_residuals()
    if rnorm > 1e-12 or rbi > 1e-12:
        raise NleigError(f"triple normalization off: {rnorm:.2e}, {rbi:.2e}")
    res_r = (apply(problem.operator, triple.psi0) - triple.mu0 * triple.psi0).norm()
    astar = adjoint(problem.operator)
    res_l = (apply(astar, triple.psi0_star)
             - np.conj(triple.mu0) * triple.psi0_star).norm()
    scale = triple.psi0_star.norm()
    if res_r > tol_abs or res_l > tol_abs * max(1.0, scale):
        raise NoConvergence(
            f"eigen-residuals {res_r:.2e}/{res_l:.2e} exceed {tol_abs:.2e}"
        )


def project(projector: SpectralProjector, u: GridFunction, which: str) -> GridFunction:
    """Apply P0 (coefficient against psi0*) or its complement Q0."""
    t = projector.triple
    coeff = inner_product(u, t.psi0_star)
    p0u = coeff * t.psi0
    if which == "P0":
        return p0u
    if which == "Q0":
        return u - p0u
    raise NleigError(f"which must be 'P0' or 'Q0', got {which!r}")


def symmetrize_eigenvector(triple: EigenTriple, c_op: SymmetryOp,
                           phase_node: int | None = None) -> EigenTriple:
    """Replace psi0 by its C-symmetric representative (real simple mu0 only).

    Uses psi0 + C psi0, falling back to i (psi0 - C psi0) when the sum nearly
    vanishes; psi0* is symmetrized the same way and the pair re-normalized.
    The remaining sign freedom is fixed by Re psi0(x0) > 0 at the phase node
    (by construction Im psi0(x0) = 0 there whenever x0 is a fixed point of
    the reflection, which is the situation the phase convention targets).
    """
    if not c_op.antilinear:
        raise NleigError("symmetrize_eigenvector requires an antilinear symmetry")
    mu0 = triple.mu0
    if abs(mu0.imag) > 1e-9 * (1 + abs(mu0)):
        raise NonRealEigenvalue(
            f"mu0 = {mu0:.6g} is not real; symmetrization is meaningless"
        )
    s = triple.psi0 + apply_symmetry(c_op, triple.psi0)
    if s.norm() < 1e-8:
        s = 1j * (triple.psi0 - apply_symmetry(c_op, triple.psi0))
    psi0 = (1.0 / s.norm()) * s

    t = triple.psi0_star + apply_symmetry(c_op, triple.psi0_star)
    if t.norm() < 1e-8:
        t = 1j * (triple.psi0_star - apply_symmetry(c_op, triple.psi0_star))

    if phase_node is None:
        fixed = np.nonzero(c_op.permutation == np.arange(len(c_op.permutation)))[0]
        pool = fixed if len(fixed) else np.arange(len(c_op.permutation))
        phase_node = int(pool[int(np.argmax(np.abs(psi0.values[pool])))])
    if psi0.values[phase_node].real < 0:
        psi0 = -psi0

    overlap = inner_product(psi0, t)
    if abs(overlap) < _DEFECTIVE_TOL:
        raise DefectivePair("symmetrized pair is numerically defective")
    psi0_star = (1.0 / np.conj(overlap)) * t

    sym_res = (apply_symmetry(c_op, psi0) - psi0).norm()
    if sym_res > 1e-10:
        raise NleigError(f"symmetrization residual {sym_res:.2e} above 1e-10")
    return EigenTriple(mu0, psi0, psi0_star, triple.gap)


def projector_symmetry_residual(projector: SpectralProjector, c_op: SymmetryOp,
                                probes: int = 32, seed: int = 3) -> float:
    """max over seeded probes of ||P0 C u - C P0 u|| / ||u||."""
    grid = projector.triple.psi0.grid
    worst = 0.0
    for u in _probe_vectors(grid, probes, seed):
        lhs = project(projector, apply_symmetry(c_op, u), "P0")
        rhs = apply_symmetry(c_op, project(projector, u, "P0"))
        worst = max(worst, (lhs - rhs).norm() / u.norm())
    return worst
