"""Constructive nonlinear eigenvalue solver via nested fixed-point iteration.

Solves (A - mu) psi - eps f(psi) = 0 under the constraint <psi, psi0*> = 1
near a simple eigenpair (mu0, psi0) by the decomposition

    mu  = mu0 + eps nu + eps^2 sigma,
    psi = psi0 + eps phi + chi,

with nu = -<f(psi0), psi0*>, phi the unique complement solution of
(A - mu0) phi = nu psi0 + f(psi0), and (sigma, chi) the nested fixed point

    chi   = (Q0 (A - mu0) Q0)^{-1} R(chi),
    R(chi) = eps [ (nu + eps sigma)(chi + eps phi)
                   + Q0 (f(psi0 + eps phi + chi) - f(psi0)) ],
    sigma = -(1/eps) <f(psi) - f(psi0), psi0*>.

The inner chi loop runs per outer sigma evaluation, both started at zero.
The projected inverse is realized as a bordered solve with border vectors
(psi0, psi0*), factorized once per eigentriple.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import BorderedSystem, GridFunction, apply, bordered_solve, inner_product
from .errors import (InconsistentRHS, MaxIterations, NleigError, NoContraction,
                     NotHomogeneous, ResidualCheckFailed)
from .nonlinearity import NonlinearitySpec, eval_f, lipschitz_estimate
from .spectra import EigenTriple


@dataclass(frozen=True)
class LSConfig:
    """Iteration controls for the nested sigma/chi fixed point."""

    eps: float
    tol_chi: float = 1e-12
    tol_sigma: float = 1e-12
    max_inner: int = 300
    max_outer: int = 200
    contraction_guard: float = 0.95

    def __post_init__(self):
        if self.tol_chi <= 0 or self.tol_sigma <= 0:
            raise NleigError("tolerances must be positive")
        if self.max_inner < 1 or self.max_outer < 1:
            raise NleigError("iteration caps must be >= 1")


@dataclass(frozen=True)
class ContractionDiagnostics:
    r1_bound: float
    r2_bound: float
    norm_P0: float
    norm_Q0: float
    L_estimate: float
    phi_norm: float
    inner_iterations: int
    outer_iterations: int
    final_chi_norm: float
    final_sigma_abs: float


@dataclass(frozen=True)
class LSResult:
    """Solution of the constrained nonlinear eigenvalue problem at one eps."""

    eps: float
    mu: complex
    psi: GridFunction
    nu: complex
    sigma: complex
    phi: GridFunction
    chi: GridFunction
    residual: float
    constraint_residual: float
    diagnostics: ContractionDiagnostics


def compute_nu(triple: EigenTriple, spec: NonlinearitySpec) -> complex:
    """First eigenvalue correction nu = -<f(psi0), psi0*>."""
    return -inner_product(eval_f(spec, triple.psi0), triple.psi0_star)


def _border(problem, triple: EigenTriple) -> BorderedSystem:
    return BorderedSystem(problem.operator, triple.mu0, triple.psi0,
                          triple.psi0_star)


def _project_q0(u: GridFunction, triple: EigenTriple) -> GridFunction:
    return u - inner_product(u, triple.psi0_star) * triple.psi0


def solve_phi(problem, triple: EigenTriple, nu: complex,
              spec: NonlinearitySpec | None = None,
              border: BorderedSystem | None = None) -> GridFunction:
    """Unique complement solution of (A - mu0) phi = nu psi0 + f(psi0).

    The right side must be orthogonal to psi0* (which the exact nu
    guarantees); a failed solvability check raises InconsistentRHS.
    """
    spec = spec or problem.nonlinearity
    border = border or _border(problem, triple)
    fpsi0 = eval_f(spec, triple.psi0)
    rhs = nu * triple.psi0 + fpsi0
    phi, lam = bordered_solve(border, rhs, 0.0)
    # (A - mu0) phi = rhs - lam psi0 up to solver backward error, so |lam| is
    # the solvability residual ||(A - mu0) phi - nu psi0 - f(psi0)||
    if abs(lam) > 1e-10 * (1.0 + fpsi0.norm()):
        raise InconsistentRHS(
            f"solvability residual |lambda| = {abs(lam):.2e}: right side not "
            "orthogonal to psi0* (wrong nu or broken eigentriple)"
        )
    return phi


def chi_fixed_point(problem, triple: EigenTriple, phi: GridFunction,
                    nu: complex, sigma: complex, cfg: LSConfig,
                    border: BorderedSystem | None = None):
    """Inner fixed point chi = G(chi) from chi_0 = 0; returns (chi, iterations).

    Stops when the update norm falls below tol_chi; trips NoContraction when
    a successive-update ratio reaches the guard while still above the
    convergence floor.
    """
    spec = problem.nonlinearity
    border = border or _border(problem, triple)
    eps = cfg.eps
    grid = triple.psi0.grid
    chi = grid.zeros()
    if eps == 0.0:
        return chi, 1
    fpsi0 = eval_f(spec, triple.psi0)
    eps_phi = eps * phi
    last_update = None
    for k in range(1, cfg.max_inner + 1):
        psi = triple.psi0 + eps_phi + chi
        df = eval_f(spec, psi) - fpsi0
        r = eps * ((nu + eps * sigma) * (chi + eps_phi) + _project_q0(df, triple))
        chi_next, _ = bordered_solve(border, r, 0.0)
        update = (chi_next - chi).norm()
        if last_update is not None and last_update > 10 * cfg.tol_chi:
            ratio = update / last_update
            if ratio >= cfg.contraction_guard:
                raise NoContraction(
                    f"chi iteration ratio {ratio:.3f} >= guard "
                    f"{cfg.contraction_guard} at eps = {eps}",
                    ratio=ratio, loop="chi",
                )
        chi = chi_next
        if update <= cfg.tol_chi:
            return chi, k
        last_update = update
    raise MaxIterations(f"chi loop exceeded {cfg.max_inner} iterations", loop="chi")


def sigma_fixed_point(problem, triple: EigenTriple, phi: GridFunction,
                      nu: complex, cfg: LSConfig,
                      border: BorderedSystem | None = None):
    """Outer fixed point sigma = S(sigma); returns (sigma, chi, iterations).

    Each evaluation of S runs the inner chi loop at the current sigma
    (the nested structure of the construction).  eps = 0 short-circuits.
    """
    spec = problem.nonlinearity
    border = border or _border(problem, triple)
    eps = cfg.eps
    if eps == 0.0:
        return 0.0 + 0.0j, triple.psi0.grid.zeros(), 0, 0
    fpsi0 = eval_f(spec, triple.psi0)
    sigma = 0.0 + 0.0j
    total_inner = 0
    last_update = None
    for j in range(1, cfg.max_outer + 1):
        chi, inner_iters = chi_fixed_point(problem, triple, phi, nu, sigma,
                                           cfg, border=border)
        total_inner += inner_iters
        psi = triple.psi0 + eps * phi + chi
        sigma_next = -inner_product(eval_f(spec, psi) - fpsi0,
                                    triple.psi0_star) / eps
        update = abs(sigma_next - sigma)
        if last_update is not None and last_update > 10 * cfg.tol_sigma:
            ratio = update / last_update
            if ratio >= cfg.contraction_guard:
                raise NoContraction(
                    f"sigma iteration ratio {ratio:.3f} >= guard "
                    f"{cfg.contraction_guard} at eps = {eps}",
                    ratio=ratio, loop="sigma",
                )
        sigma = sigma_next
        if update <= cfg.tol_sigma:
            return sigma, chi, j, total_inner
        last_update = update
    raise MaxIterations(f"sigma loop exceeded {cfg.max_outer} iterations",
                        loop="sigma")


def _inverse_norm_estimate(border: BorderedSystem, triple: EigenTriple,
                           probes: int = 8, seed: int = 11) -> float:
    """||(Q0 (A - mu0) Q0)^{-1}|| estimated by seeded bordered solves."""
    rng = np.random.default_rng(seed)
    grid = triple.psi0.grid
    worst = 0.0
    for _ in range(probes):
        z = GridFunction(grid, rng.standard_normal(grid.size)
                         + 1j * rng.standard_normal(grid.size))
        q0z = _project_q0(z, triple)
        if q0z.norm() == 0.0:
            continue
        u, _ = bordered_solve(border, q0z, 0.0)
        worst = max(worst, u.norm() / q0z.norm())
    return worst


def ls_solve(problem, triple: EigenTriple, cfg: LSConfig) -> LSResult:
    """Full constructive solve: nu, phi, nested (sigma, chi), assembly.

    The assembled pair satisfies mu = mu0 + eps nu + eps^2 sigma and
    psi = psi0 + eps phi + chi by construction; the equation residual and
    the constraint <psi, psi0*> = 1 are verified before returning.
    """
    spec = problem.nonlinearity
    border = _border(problem, triple)
    nu = compute_nu(triple, spec)
    phi = solve_phi(problem, triple, nu, spec=spec, border=border)
    sigma, chi, outer_iters, inner_iters = sigma_fixed_point(
        problem, triple, phi, nu, cfg, border=border)
    eps = cfg.eps
    mu = triple.mu0 + eps * nu + eps**2 * sigma
    psi = triple.psi0 + eps * phi + chi

    p0_phi = inner_product(phi, triple.psi0_star)
    p0_chi = inner_product(chi, triple.psi0_star)
    if max(abs(p0_phi), abs(p0_chi)) > 1e-11:
        raise ResidualCheckFailed(
            f"corrections left the complement range: |P0 phi| = {abs(p0_phi):.2e}, "
            f"|P0 chi| = {abs(p0_chi):.2e}"
        )
    residual = (apply(problem.operator, psi) - mu * psi
                - eps * eval_f(spec, psi)).norm()
    if residual > 10 * cfg.tol_chi * (1.0 + problem.norm_a1):
        raise ResidualCheckFailed(
            f"equation residual {residual:.2e} exceeds "
            f"{10 * cfg.tol_chi * (1.0 + problem.norm_a1):.2e}"
        )
    constraint_residual = abs(inner_product(psi, triple.psi0_star) - 1.0)

    norm_p0 = triple.psi0_star.norm()  # rank-one: ||P0|| = ||psi0|| ||psi0*||
    norm_q0 = max(norm_p0, 1.0)       # ||I - P|| = ||P|| for nontrivial projectors
    inv_norm = _inverse_norm_estimate(border, triple)
    c_mu0 = 1.0 + (1.0 + abs(triple.mu0)) * inv_norm
    sup = lambda u: float(np.max(np.abs(u.values)))
    radius = 0.05 * max(sup(triple.psi0), 1e-12) + abs(eps) * sup(phi) + 2 * sup(chi)
    l_est = lipschitz_estimate(spec, triple.psi0, radius, samples=64, seed=17)
    phi_norm = phi.norm()
    diagnostics = ContractionDiagnostics(
        r1_bound=norm_p0 * l_est * phi_norm,
        r2_bound=c_mu0 * (abs(nu) + norm_q0 * l_est) * phi_norm,
        norm_P0=norm_p0,
        norm_Q0=norm_q0,
        L_estimate=l_est,
        phi_norm=phi_norm,
        inner_iterations=inner_iters,
        outer_iterations=outer_iters,
        final_chi_norm=chi.norm(),
        final_sigma_abs=abs(sigma),
    )
    return LSResult(eps=eps, mu=complex(mu), psi=psi, nu=complex(nu),
                    sigma=complex(sigma), phi=phi, chi=chi, residual=residual,
                    constraint_residual=constraint_residual,
                    diagnostics=diagnostics)


def rescale_unit_norm(problem, result: LSResult,
                      spec: NonlinearitySpec | None = None):
    """Homogeneous rescaling to a unit-norm eigenfunction.

    Returns (eps_tilde, mu_tilde, psi_tilde) with
    eps_tilde = eps * ||psi||^(q-1), psi_tilde = psi / ||psi||, mu unchanged,
    and verifies the rescaled equation residual.
    """
    spec = spec or problem.nonlinearity
    q = spec.homogeneity_degree
    if q is None:
        raise NotHomogeneous(f"kind {spec.kind!r} admits no unit-norm rescaling")
    n = result.psi.norm()
    eps_t = result.eps * n ** (q - 1.0)
    psi_t = (1.0 / n) * result.psi
    mu_t = result.mu
    res = (apply(problem.operator, psi_t) - mu_t * psi_t
           - eps_t * eval_f(spec, psi_t)).norm()
    if res > 1e-9 * (1.0 + problem.norm_a1):
        raise ResidualCheckFailed(
            f"rescaled residual {res:.2e} exceeds 1e-9 * (1 + ||A||_1)"
        )
    return float(eps_t), complex(mu_t), psi_t
