"""Acceptance suite: one test per primary criterion, at its stated tolerance.

Run with -v to get one pass/fail line per criterion.  The 2D criteria are
the slow ones (sho6 at 161^2, gauss9 collision at 131^2); everything else
is seconds.
"""

import time

import numpy as np
import pytest

from nleig.continuation import (ContinuationConfig, continue_branch,
                                refine_collision, seed_point)
from nleig.core import GridFunction, inner_product
from nleig.ls_solver import (LSConfig, compute_nu, ls_solve, rescale_unit_norm,
                             solve_phi)
from nleig.models import (ModelSpec, build_model, dnls_exact_spectrum,
                          toy_eigenfunction)
from nleig.spectra import (SpectralProjector, compute_eigentriple, project,
                           projector_symmetry_residual, symmetrize_eigenvector)
from nleig.symmetry import (antilinear_isometry_residual, apply_symmetry,
                            solution_symmetry_residual)

from conftest import make_toy, toy_triple


def _toy_mu_error(n, eps):
    problem = make_toy(0.5, n)
    triple = toy_triple(problem, 0.2)
    result = ls_solve(problem, triple, LSConfig(eps=eps))
    exact = 0.25 - eps / np.pi
    return abs(result.mu - exact), result, problem


def test_criterion_toy_exact_nonlinear_pair():
    t0 = time.monotonic()
    for eps in (0.05, 0.1, 0.2):
        err, result, problem = _toy_mu_error(2048, eps)
        assert err <= 2e-5
        xi0 = toy_eigenfunction(0.5, 0, problem.grid)
        assert (result.psi - xi0).norm() <= 1e-4
    # halving h (n: 2048 -> 4095) must reduce the mu error by ~4x
    coarse, _, _ = _toy_mu_error(2048, 0.1)
    fine, _, _ = _toy_mu_error(4095, 0.1)
    assert 3.4 <= coarse / fine <= 4.6
    assert time.monotonic() - t0 < 10.0


def test_criterion_nu_oracle():
    problem = make_toy(0.5, 2048)
    triple = toy_triple(problem, 0.2)
    nu0 = compute_nu(triple, problem.nonlinearity)
    assert abs(nu0 - (-1 / np.pi)) <= 1e-6
    fine = make_toy(0.4, 4096)
    for target in (0.9, 3.9):  # n = 1, 2
        triple_n = toy_triple(fine, target)
        nu_n = compute_nu(triple_n, fine.nonlinearity)
        assert abs(nu_n - (-3 / (2 * np.pi))) <= 1e-4


def test_criterion_dnls_spectrum():
    t0 = time.monotonic()
    key = lambda z: (round(z.real, 9), round(z.imag, 9))
    for big_n in range(1, 7):
        for gamma in (0.0, 0.3, 0.6):
            problem = build_model(ModelSpec("dnls",
                                            {"N": big_n, "gamma": gamma}))
            dense = sorted(np.linalg.eigvals(problem.operator.matrix.toarray()),
                           key=key)
            exact = sorted(dnls_exact_spectrum(big_n, gamma), key=key)
            assert np.max(np.abs(np.array(dense) - np.array(exact))) <= 1e-12
            # ls branches from every real simple eigenvalue stay real and
            # lattice-PT symmetric
            c_op = problem.symmetry("lattice-PT")
            reals = [z for z in exact if abs(z.imag) < 1e-9]
            for lam in reals:
                triple = compute_eigentriple(problem, lam)
                triple = symmetrize_eigenvector(triple, c_op)
                for eps in (0.025, 0.05, 0.1):
                    r = ls_solve(problem, triple, LSConfig(eps=eps))
                    assert abs(r.mu.imag) <= 1e-10, (big_n, gamma, lam, eps)
                    assert solution_symmetry_residual(c_op, r.psi, +1) <= 1e-7
    assert time.monotonic() - t0 < 5.0


def test_criterion_sho6_2d_eigenvalues():
    t0 = time.monotonic()
    problem = build_model(ModelSpec("sho6_2d", {"gamma": 2.0}, n=161))
    reference = {2.0: 2.096, 2.6: 2.583, 3.2: 3.155, 4.3: 4.256}
    for target, ref in reference.items():
        triple = compute_eigentriple(problem, target)
        assert abs(triple.mu0.real - ref) / ref <= 0.02, (target, triple.mu0)
        assert abs(triple.mu0.imag) <= 1e-8
    assert time.monotonic() - t0 < 180.0


def test_criterion_gauss9_collision_location():
    t0 = time.monotonic()
    problem = build_model(ModelSpec("gauss9_2d",
                                    {"gamma": 0.0, "v0": 1.0, "a": 1.5},
                                    n=131))
    triple = compute_eigentriple(problem, -0.85)
    triple = symmetrize_eigenvector(triple, problem.symmetry("P1T"),
                                    phase_node=problem.phase_node)
    cfg = ContinuationConfig(step=0.02, max_step=0.02, min_step=1e-5,
                             complex_mu_allowed=True)
    seed = seed_point(problem, triple.psi0, triple.mu0, eps=0.0)
    branch = continue_branch(problem, seed, cfg, "gamma", 0.3, branch_id="1")
    gamma_star = refine_collision(problem, branch, cfg)
    assert 0.19 <= gamma_star <= 0.25, gamma_star
    # the branch stays real and P1T-symmetric up to the collision
    before = [pt for pt in branch.points if pt.gamma < gamma_star - 0.01]
    assert before
    for pt in before:
        assert abs(pt.mu.imag) <= 1e-8 * (1 + abs(pt.mu))
        assert pt.symmetry_residuals["P1T"]["residual"] <= 1e-7
    assert time.monotonic() - t0 < 600.0


def _branch_symmetry_checks(problem, branch, seed_sym_name):
    mus = branch.mus()
    assert np.max(np.abs(mus.imag) / (1 + np.abs(mus))) <= 1e-8
    worst = max(pt.symmetry_residuals[seed_sym_name]["residual"]
                for pt in branch.points)
    assert worst <= 1e-7, (branch.branch_id, seed_sym_name, worst)
    for op in problem.linear_symmetries:
        entries = [pt.symmetry_residuals[op.name] for pt in branch.points]
        if all(e["residual"] <= 1e-6 for e in entries):
            signs = {e["sign"] for e in entries}
            assert len(signs) == 1, (branch.branch_id, op.name, signs)


def test_criterion_realness_and_symmetry_preservation():
    # toy ground branch
    toy = make_toy(0.5, 1023)
    tr = toy_triple(toy, 0.2)
    seed = seed_point(toy, tr.psi0, tr.mu0, eps=0.0)
    branch = continue_branch(toy, seed, ContinuationConfig(step=0.05),
                             "eps", 0.5, "toy")
    _branch_symmetry_checks(toy, branch, "PT")

    # dnls gamma branch: mu stays real (gauge-invariant) even though the
    # even chain has no reflection-fixed node for a symmetric phase gauge;
    # psi-symmetry for dnls is asserted on the LS path in the dnls criterion
    dnls = build_model(ModelSpec("dnls", {"N": 2, "gamma": 0.1}))
    tr = symmetrize_eigenvector(compute_eigentriple(dnls, -1.7),
                                dnls.symmetry("lattice-PT"))
    seed = seed_point(dnls, tr.psi0, tr.mu0, eps=0.0)
    branch = continue_branch(dnls, seed, ContinuationConfig(step=0.05),
                             "gamma", 0.5, "dnls")
    mus = branch.mus()
    assert np.max(np.abs(mus.imag) / (1 + np.abs(mus))) <= 1e-8

    # sho6 eps branches from mu1 (PT gauge) and mu3 (P1T gauge after the
    # multiplication by i chosen at seeding)
    sho = build_model(ModelSpec("sho6_2d", {"gamma": 2.0}, n=81))
    cfg = ContinuationConfig(step=0.25, max_step=0.35)
    for target, sym in ((2.0, "PT"), (3.2, "P1T")):
        tr = symmetrize_eigenvector(compute_eigentriple(sho, target),
                                    sho.symmetry("PT"),
                                    phase_node=sho.phase_node)
        seed = seed_point(sho, tr.psi0, tr.mu0, eps=0.0)
        branch = continue_branch(sho, seed, cfg, "eps", 3.0, f"sho-{target}")
        _branch_symmetry_checks(sho, branch, sym)


def test_criterion_expansion_order():
    eps_grid = np.array([1e-3, 10**-2.5, 1e-2, 10**-1.5, 1e-1])

    def slopes(problem, triple):
        nu = compute_nu(triple, problem.nonlinearity)
        phi = solve_phi(problem, triple, nu)
        mu_err, psi_err = [], []
        for eps in eps_grid:
            r = ls_solve(problem, triple, LSConfig(eps=eps))
            mu_err.append(abs(r.mu - triple.mu0 - eps * nu))
            psi_err.append((r.psi - triple.psi0 - eps * phi).norm())
        return (np.polyfit(np.log(eps_grid), np.log(mu_err), 1)[0],
                np.polyfit(np.log(eps_grid), np.log(psi_err), 1)[0])

    toy = make_toy(0.4, 4096)
    s_mu, s_psi = slopes(toy, toy_triple(toy, 0.9))
    assert 1.8 <= s_mu <= 2.2 and 1.8 <= s_psi <= 2.2

    dnls = build_model(ModelSpec("dnls", {"N": 2, "gamma": 0.3}))
    triple = symmetrize_eigenvector(compute_eigentriple(dnls, -1.7),
                                    dnls.symmetry("lattice-PT"))
    s_mu, s_psi = slopes(dnls, triple)
    assert 1.8 <= s_mu <= 2.2 and 1.8 <= s_psi <= 2.2


def test_criterion_projection_symmetry_algebra(rng):
    t0 = time.monotonic()
    toy = make_toy(0.5, 2048)
    triple = toy_triple(toy, 0.2)
    proj = SpectralProjector(triple)
    c = toy.symmetry("PT")
    for _ in range(32):
        u = GridFunction(toy.grid, rng.standard_normal(2048)
                         + 1j * rng.standard_normal(2048))
        p0u = project(proj, u, "P0")
        assert (project(proj, p0u, "P0") - p0u).norm() <= 1e-12 * u.norm()
        assert (p0u + project(proj, u, "Q0") - u).norm() <= 1e-14 * u.norm()
        assert np.array_equal(
            apply_symmetry(c, apply_symmetry(c, u)).values, u.values)
    assert projector_symmetry_residual(proj, c) <= 1e-9
    assert antilinear_isometry_residual(c, toy.grid) <= 1e-13

    dnls = build_model(ModelSpec("dnls", {"N": 2, "gamma": 0.3}))
    triple = symmetrize_eigenvector(compute_eigentriple(dnls, -1.7),
                                    dnls.symmetry("lattice-PT"))
    assert projector_symmetry_residual(SpectralProjector(triple),
                                       dnls.symmetry("lattice-PT")) <= 1e-9
    assert antilinear_isometry_residual(dnls.symmetry("lattice-PT"),
                                        dnls.grid) <= 1e-13
    assert time.monotonic() - t0 < 5.0


def test_criterion_rescaling():
    for alpha, n, target in ((0.5, 2048, 0.2), (0.4, 2047, 0.9)):
        problem = make_toy(alpha, n)
        triple = toy_triple(problem, target)
        eps_grid = [0.02, 0.05, 0.1, 0.15, 0.2]
        eps_tilde = []
        for eps in eps_grid:
            result = ls_solve(problem, triple, LSConfig(eps=eps))
            # rescale_unit_norm verifies the unit-norm equation residual
            # against 1e-9 * (1 + ||A||_1) and raises on violation
            eps_t, mu_t, psi_t = rescale_unit_norm(problem, result)
            assert abs(psi_t.norm() - 1.0) <= 1e-12
            eps_tilde.append(eps_t)
        assert np.all(np.diff(eps_tilde) > 0)


def test_criterion_cross_solver_consistency():
    problem = make_toy(0.4, 2047)
    triple = toy_triple(problem, 0.9)
    result = ls_solve(problem, triple, LSConfig(eps=0.2))
    eps_t, mu_t, psi_t = rescale_unit_norm(problem, result)
    point = seed_point(problem, psi_t, mu_t, eps=eps_t)
    assert abs(point.mu - mu_t) <= 5e-4
