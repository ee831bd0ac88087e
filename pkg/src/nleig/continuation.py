"""Newton-corrected continuation of nonlinear eigenpairs in eps or gamma.

The corrector solves the real-augmented system

    F(psi, mu) = (A - mu) psi - eps f(psi) = 0,
    ||psi||^2 = 1,      Im psi(x0) = 0,

with unknowns (Re psi, Im psi, Re mu, Im mu); the cubic/polynomial
nonlinearity is differentiated exactly in real coordinates (|psi|^2 psi is
not complex-differentiable).  The gauge constraint pins the free phase at
the model's phase-fixing node x0.

The branch machinery provides natural-parameter and pseudo-arclength
stepping with secant predictors and adaptive step halving, a bifurcation
indicator (smallest singular value of the bordered Jacobian, estimated by
inverse iterations on the corrector's LU factors), dip detection with
ternary-search refinement, branch switching along the near-null direction,
and eigenvalue-collision location for gamma-continuation.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .core import GridFunction, SparseOperator, apply, _factorize
from .errors import (ConfigError, NewtonDiverged, NleigError, StepUnderflow,
                     SwitchFailed)
from .models import DiscretizedProblem, ModelSpec, build_model
from .nonlinearity import eval_f, pointwise_derivative
from .symmetry import apply_symmetry, solution_symmetry_residual

_INDICATOR_PROBES = 12


@dataclass(frozen=True)
class ContinuationConfig:
    mode: str = "natural"          # "natural" | "arclength"
    step: float = 0.05
    min_step: float = 1e-6
    max_step: float = 0.5
    max_steps: int = 400
    newton_tol: float = 1e-10
    max_newton: int = 50
    detect_bifurcations: bool = False
    complex_mu_allowed: bool = False

    def __post_init__(self):
        if self.step <= 0 or self.min_step <= 0 or self.max_step <= 0:
            raise ConfigError("continuation steps must be positive")
        if self.mode not in ("natural", "arclength"):
            raise ConfigError(f"unknown continuation mode {self.mode!r}")


@dataclass(frozen=True)
class BranchPoint:
    eps: float
    gamma: float
    mu: complex
    psi: GridFunction
    newton_residual: float
    symmetry_residuals: dict
    stability_indicator: float
    phase_node: int

    def parameter(self, name: str) -> float:
        return self.eps if name == "eps" else self.gamma


@dataclass
class Branch:
    branch_id: str
    parent_id: str | None
    parameter_name: str
    points: list = field(default_factory=list)
    bifurcation_markers: list = field(default_factory=list)
    norm_a1: float = 0.0
    status: str = "ok"

    def parameters(self):
        return np.array([p.parameter(self.parameter_name) for p in self.points])

    def mus(self):
        return np.array([p.mu for p in self.points])


# ---------------------------------------------------------------------------
# parameter plumbing: eps enters the residual, gamma reassembles the operator
# ---------------------------------------------------------------------------

class _GammaFamily:
    """Linear operator family A(gamma) = A(0) + gamma * dA.

    All in-scope models depend linearly on gamma, so two assemblies suffice
    to rebuild the operator at any gamma without re-running the builders.
    """

    def __init__(self, problem: DiscretizedProblem):
        spec = problem.spec
        if "gamma" not in spec.params:
            raise ConfigError(f"model {spec.name!r} has no gamma parameter")
        self.base_problem = problem
        a0 = self._matrix_at(spec, 0.0)
        a1 = self._matrix_at(spec, 1.0)
        self.a0 = a0
        self.da = (a1 - a0).tocsr()

    @staticmethod
    def _matrix_at(spec: ModelSpec, gamma: float):
        new_spec = ModelSpec(spec.name, {**spec.params, "gamma": gamma},
                             spec.n, spec.half_width, spec.nonlinearity)
        return build_model(new_spec).operator.matrix

    def problem_at(self, gamma: float) -> DiscretizedProblem:
        mat = (self.a0 + gamma * self.da).tocsr()
        op = SparseOperator(mat, self.base_problem.grid)
        spec = self.base_problem.spec
        new_spec = ModelSpec(spec.name, {**spec.params, "gamma": gamma},
                             spec.n, spec.half_width, spec.nonlinearity)
        return dataclasses.replace(self.base_problem, operator=op,
                                   spec=new_spec, norm_a1=op.norm_1())


def _problem_for(problem, param_name: str, value: float, base_eps: float,
                 base_gamma: float, family=None):
    """Problem and (eps, gamma) at one parameter value along a branch."""
    if param_name == "eps":
        return problem, float(value), float(base_gamma), family
    if param_name == "gamma":
        family = family or _GammaFamily(problem)
        return family.problem_at(float(value)), float(base_eps), float(value), family
    raise ConfigError(f"continuation parameter must be 'eps' or 'gamma', got {param_name!r}")


# ---------------------------------------------------------------------------
# Newton corrector
# ---------------------------------------------------------------------------

def _split_real(matrix: sp.spmatrix):
    csr = matrix.tocsr()
    ar = sp.csr_matrix((csr.data.real, csr.indices, csr.indptr), shape=csr.shape)
    ai = sp.csr_matrix((csr.data.imag, csr.indices, csr.indptr), shape=csr.shape)
    return ar, ai


def choose_phase_node(problem: DiscretizedProblem, psi: GridFunction) -> int:
    """Phase-fixing node for a branch seeded at psi.

    Prefers the model's default node; when psi is too small there, falls
    back to reflection-fixed nodes of the declared antilinear symmetries
    (where a symmetric state automatically has a real value) ranked by
    |psi|, and finally to the global maximum of |psi|.
    """
    vals = np.abs(psi.values)
    vmax = float(np.max(vals))
    if vals[problem.phase_node] >= 1e-3 * vmax:
        return problem.phase_node
    pool = []
    for op in problem.antilinear_symmetries:
        fixed = np.nonzero(op.permutation == np.arange(len(op.permutation)))[0]
        pool.extend(fixed.tolist())
    if pool:
        pool = np.unique(pool)
        best = int(pool[int(np.argmax(vals[pool]))])
        if vals[best] >= 1e-3 * vmax:
            return best
    return int(np.argmax(vals))


def _augmented_jacobian(problem, eps, psi_vals, mu, phase_node, extra_col=None):
    """Real Jacobian of (F, ||psi||^2 - 1, Im psi(x0)) at (psi, mu)."""
    m = problem.grid.size
    ar, ai = _split_real(problem.operator.matrix)
    a, b = mu.real, mu.imag
    eye = sp.identity(m, format="csr")
    if eps != 0.0:
        fz, fzbar = pointwise_derivative(problem.nonlinearity,
                                         GridFunction(problem.grid, psi_vals))
        dfr_du = sp.diags(np.real(fz + fzbar))
        dfr_dv = sp.diags(-np.imag(fz - fzbar))
        dfi_du = sp.diags(np.imag(fz + fzbar))
        dfi_dv = sp.diags(np.real(fz - fzbar))
    else:
        dfr_du = dfr_dv = dfi_du = dfi_dv = sp.csr_matrix((m, m))
    j11 = ar - a * eye - eps * dfr_du
    j12 = -(ai - b * eye) - eps * dfr_dv
    j21 = (ai - b * eye) - eps * dfi_du
    j22 = ar - a * eye - eps * dfi_dv
    u = psi_vals.real
    v = psi_vals.imag
    col_a = np.concatenate([-u, -v]).reshape(2 * m, 1)
    col_b = np.concatenate([v, -u]).reshape(2 * m, 1)
    w = problem.grid.weights
    row_c1 = sp.csr_matrix(np.concatenate([2 * w * u, 2 * w * v]).reshape(1, 2 * m))
    c2 = np.zeros(2 * m)
    c2[m + phase_node] = 1.0
    row_c2 = sp.csr_matrix(c2.reshape(1, 2 * m))
    blocks = [
        [sp.bmat([[j11, j12], [j21, j22]]), sp.csr_matrix(col_a), sp.csr_matrix(col_b)],
        [row_c1, None, None],
        [row_c2, None, None],
    ]
    if extra_col is not None:
        fcol, trow = extra_col
        blocks[0].append(sp.csr_matrix(fcol.reshape(2 * m, 1)))
        blocks.append([sp.csr_matrix(trow[: 2 * m].reshape(1, 2 * m)),
                       sp.csr_matrix([[trow[2 * m]]]),
                       sp.csr_matrix([[trow[2 * m + 1]]]),
                       sp.csr_matrix([[trow[2 * m + 2]]])])
        blocks[1].extend([None])
        blocks[2].extend([None])
    return sp.bmat(blocks, format="csc")


def _residual_parts(problem, eps, psi_vals, mu, phase_node):
    psi = GridFunction(problem.grid, psi_vals)
    f = apply(problem.operator, psi) - mu * psi
    if eps != 0.0:
        f = f - eps * eval_f(problem.nonlinearity, psi)
    w = problem.grid.weights
    c1 = float(np.sum(w * np.abs(psi_vals) ** 2) - 1.0)
    c2 = float(psi_vals[phase_node].imag)
    return f, c1, c2


def _residual_norm(problem, f: GridFunction, c1: float, c2: float) -> float:
    return float(np.sqrt(f.norm() ** 2 + c1**2 + c2**2))


def _newton_solve(problem, eps, psi_vals, mu, cfg: ContinuationConfig,
                  phase_node: int | None = None):
    """Newton iteration; returns (psi_vals, mu, residual, lu)."""
    m = problem.grid.size
    if phase_node is None:
        phase_node = problem.phase_node
    tol = cfg.newton_tol * (1.0 + problem.norm_a1)
    history = []
    lu = None
    for it in range(cfg.max_newton):
        f, c1, c2 = _residual_parts(problem, eps, psi_vals, mu, phase_node)
        res = _residual_norm(problem, f, c1, c2)
        history.append(res)
        constraints_ok = abs(c1) <= 1e-10 and abs(c2) <= 1e-10
        if res <= tol and constraints_ok and lu is not None:
            return psi_vals, mu, res, lu
        if len(history) >= 5 and all(
                history[-k] > history[-k - 1] for k in range(1, 5)):
            raise NewtonDiverged(
                f"residual grew over 4 consecutive steps (last {res:.2e})")
        jac = _augmented_jacobian(problem, eps, psi_vals, mu, phase_node)
        lu = _factorize(jac, check_singular=False)
        rhs = np.concatenate([f.values.real, f.values.imag, [c1, c2]])
        delta = lu.solve(-rhs)
        psi_vals = psi_vals + delta[:m] + 1j * delta[m:2 * m]
        mu = mu + complex(delta[2 * m], delta[2 * m + 1])
    f, c1, c2 = _residual_parts(problem, eps, psi_vals, mu, phase_node)
    res = _residual_norm(problem, f, c1, c2)
    if res <= tol and abs(c1) <= 1e-10 and abs(c2) <= 1e-10:
        return psi_vals, mu, res, lu
    raise NewtonDiverged(f"no convergence after {cfg.max_newton} iterations "
                         f"(residual {res:.2e}, tol {tol:.2e})")


def _smallest_singular_value(lu, n: int, seed: int = 5,
                             iters: int = _INDICATOR_PROBES) -> float:
    """sigma_min(J) by power iteration on (J^T J)^{-1} via the LU factors."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        t = lu.solve(v, trans="T")
        y = lu.solve(t)
        lam = float(np.linalg.norm(y))
        if lam == 0.0 or not np.isfinite(lam):
            return 0.0
        v = y / lam
    return 1.0 / np.sqrt(lam)


def _symmetry_residuals(problem, psi: GridFunction) -> dict:
    out = {}
    for op in problem.symmetries:
        if op.conjugate:
            out[op.name] = {"residual": solution_symmetry_residual(op, psi, +1),
                            "sign": None}
        else:
            rp = solution_symmetry_residual(op, psi, +1)
            rm = solution_symmetry_residual(op, psi, -1)
            sign = 1 if rp <= rm else -1
            out[op.name] = {"residual": min(rp, rm), "sign": sign}
    return out


def newton_correct(problem: DiscretizedProblem, predictor: BranchPoint,
                   cfg: ContinuationConfig | None = None) -> BranchPoint:
    """Correct a predictor to a solution of the constrained system.

    The problem must already be assembled at the predictor's gamma; eps is
    taken from the predictor.  Raises NewtonDiverged outside the basin.
    """
    cfg = cfg or ContinuationConfig()
    node = predictor.phase_node
    if node is None or node < 0:
        node = choose_phase_node(problem, predictor.psi)
    psi_vals, mu, res, lu = _newton_solve(problem, predictor.eps,
                                          predictor.psi.values.copy(),
                                          complex(predictor.mu), cfg,
                                          phase_node=node)
    psi = GridFunction(problem.grid, psi_vals)
    return BranchPoint(
        eps=float(predictor.eps),
        gamma=float(predictor.gamma),
        mu=complex(mu),
        psi=psi,
        newton_residual=res,
        symmetry_residuals=_symmetry_residuals(problem, psi),
        stability_indicator=_smallest_singular_value(lu, 2 * problem.grid.size + 2),
        phase_node=node,
    )


def _prepare_gauge(problem: DiscretizedProblem, psi: GridFunction):
    """Gauge a seed so the phase constraint is compatible and well scaled.

    For each declared antilinear symmetry, try the symmetric representative
    (psi + C psi, or i (psi - C psi), e.g. the multiplication by i that
    swaps PT- for P1T-symmetric gauges): at a reflection-fixed node the
    representative is automatically real, so Im psi(x0) = 0 costs nothing.
    Falls back to a plain phase rotation at the largest node.
    """
    vmax = float(np.max(np.abs(psi.values)))
    for op in problem.antilinear_symmetries:
        s = psi + apply_symmetry(op, psi)
        if s.norm() < 1e-8 * psi.norm():
            s = 1j * (psi - apply_symmetry(op, psi))
        s = (1.0 / s.norm()) * psi.norm() * s
        if solution_symmetry_residual(op, s, +1) > 1e-8:
            continue
        fixed = np.nonzero(op.permutation == np.arange(len(op.permutation)))[0]
        if not len(fixed):
            continue
        node = int(fixed[int(np.argmax(np.abs(s.values[fixed])))])
        if abs(s.values[node]) < 1e-3 * vmax:
            continue
        if s.values[node].real < 0:
            s = -s
        return s, node
    node = int(np.argmax(np.abs(psi.values)))
    phase = psi.values[node]
    return (np.conj(phase) / abs(phase)) * psi, node


def seed_point(problem: DiscretizedProblem, psi: GridFunction, mu: complex,
               eps: float = 0.0, cfg: ContinuationConfig | None = None) -> BranchPoint:
    """Newton-tighten an (eigentriple or LS) solution into a BranchPoint.

    The seed is re-gauged first so that the phase-fixing constraint is both
    nondegenerate and compatible with an antilinear-symmetric gauge.
    """
    gamma = float(problem.spec.params.get("gamma", 0.0))
    psi, node = _prepare_gauge(problem, psi)
    predictor = BranchPoint(eps=eps, gamma=gamma, mu=mu, psi=psi,
                            newton_residual=np.inf, symmetry_residuals={},
                            stability_indicator=np.nan, phase_node=node)
    return newton_correct(problem, predictor, cfg)


# ---------------------------------------------------------------------------
# branch continuation
# ---------------------------------------------------------------------------

def _predict(points, param_name, new_param):
    """Secant predictor (copy of the last point for the first step)."""
    last = points[-1]
    if len(points) == 1:
        return last.psi.values.copy(), complex(last.mu)
    prev = points[-2]
    p1 = last.parameter(param_name)
    p0 = prev.parameter(param_name)
    if p1 == p0:
        return last.psi.values.copy(), complex(last.mu)
    t = (new_param - p1) / (p1 - p0)
    psi = last.psi.values + t * (last.psi.values - prev.psi.values)
    mu = last.mu + t * (last.mu - prev.mu)
    return psi, complex(mu)


def continue_branch(problem: DiscretizedProblem, seed: BranchPoint,
                    cfg: ContinuationConfig, param_name: str,
                    param_target: float, branch_id: str = "0",
                    parent_id: str | None = None) -> Branch:
    """Continue a converged seed toward param_target.

    Natural mode steps the parameter directly (adaptive halving on Newton
    failure); arclength mode appends the parameter to the unknowns with a
    secant tangent constraint, which also passes folds.  Every accepted
    point records residuals, symmetry residuals and the stability
    indicator; StepUnderflow carries the partial branch.
    """
    if param_name == "eps":
        if cfg.mode == "arclength":
            return _continue_arclength(problem, seed, cfg, param_name,
                                       param_target, branch_id, parent_id)
        return _continue_natural(problem, seed, cfg, param_name, param_target,
                                 branch_id, parent_id)
    if cfg.mode == "arclength":
        return _continue_arclength(problem, seed, cfg, param_name,
                                   param_target, branch_id, parent_id)
    return _continue_natural(problem, seed, cfg, param_name, param_target,
                             branch_id, parent_id)


def _continue_natural(problem, seed, cfg, param_name, param_target,
                      branch_id, parent_id):
    branch = Branch(branch_id=branch_id, parent_id=parent_id,
                    parameter_name=param_name, points=[seed],
                    norm_a1=problem.norm_a1)
    direction = np.sign(param_target - seed.parameter(param_name)) or 1.0
    step = min(cfg.step, cfg.max_step)
    family = None
    current = seed.parameter(param_name)
    steps = 0
    while steps < cfg.max_steps and direction * (param_target - current) > 1e-14:
        new_param = current + direction * min(step, abs(param_target - current))
        prob_at, eps, gamma, family = _problem_for(
            problem, param_name, new_param, seed.eps, seed.gamma, family)
        psi0, mu0 = _predict(branch.points, param_name, new_param)
        try:
            psi_vals, mu, res, lu = _newton_solve(prob_at, eps, psi0, mu0, cfg,
                                                  phase_node=seed.phase_node)
            if (not cfg.complex_mu_allowed
                    and abs(mu.imag) > 1e-8 * (1 + abs(mu))):
                raise NewtonDiverged(
                    f"complex mu = {mu:.6g} with complex_mu_allowed = False")
        except (NewtonDiverged, NleigError):
            step /= 2
            if step < cfg.min_step:
                branch.status = "step_underflow"
                err = StepUnderflow(
                    f"branch {branch_id}: step underflow at "
                    f"{param_name} = {new_param:.6f}")
                err.branch = branch
                raise err
            continue
        psi = GridFunction(prob_at.grid, psi_vals)
        branch.points.append(BranchPoint(
            eps=eps, gamma=gamma, mu=complex(mu), psi=psi,
            newton_residual=res,
            symmetry_residuals=_symmetry_residuals(prob_at, psi),
            stability_indicator=_smallest_singular_value(
                lu, 2 * prob_at.grid.size + 2),
            phase_node=seed.phase_node,
        ))
        current = new_param
        steps += 1
        step = min(step * 1.3, cfg.max_step)
    if cfg.detect_bifurcations:
        branch.bifurcation_markers = detect_bifurcation(branch, problem, cfg)
    return branch


def _continue_arclength(problem, seed, cfg, param_name, param_target,
                        branch_id, parent_id):
    branch = Branch(branch_id=branch_id, parent_id=parent_id,
                    parameter_name=param_name, points=[seed],
                    norm_a1=problem.norm_a1)
    m = problem.grid.size
    family = None
    direction = np.sign(param_target - seed.parameter(param_name)) or 1.0
    ds = min(cfg.step, cfg.max_step)

    def pack(point):
        return np.concatenate([point.psi.values.real, point.psi.values.imag,
                               [point.mu.real, point.mu.imag,
                                point.parameter(param_name)]])

    steps = 0
    while steps < cfg.max_steps:
        pts = branch.points
        z1 = pack(pts[-1])
        if len(pts) >= 2:
            tangent = z1 - pack(pts[-2])
        else:
            tangent = np.zeros(2 * m + 3)
            tangent[-1] = direction
        tn = np.linalg.norm(tangent)
        if tn == 0.0:
            tangent[-1] = direction
            tn = 1.0
        tangent = tangent / tn
        z_pred = z1 + ds * tangent
        try:
            z_new, res, lu, family = _arclength_newton(
                problem, param_name, z_pred, tangent, z_pred, cfg,
                seed.eps, seed.gamma, seed.phase_node, family)
            mu_new = complex(z_new[2 * m], z_new[2 * m + 1])
            if (not cfg.complex_mu_allowed
                    and abs(mu_new.imag) > 1e-8 * (1 + abs(mu_new))):
                raise NewtonDiverged(
                    f"complex mu = {mu_new:.6g} with complex_mu_allowed = False")
        except (NewtonDiverged, NleigError):
            ds /= 2
            if ds < cfg.min_step:
                branch.status = "step_underflow"
                err = StepUnderflow(f"branch {branch_id}: arclength underflow")
                err.branch = branch
                raise err
            continue
        new_param = float(z_new[-1])
        prob_solved, eps, gamma, family = _problem_for(
            problem, param_name, new_param, seed.eps, seed.gamma, family)
        psi = GridFunction(prob_solved.grid, z_new[:m] + 1j * z_new[m:2 * m])
        mu = complex(z_new[2 * m], z_new[2 * m + 1])
        branch.points.append(BranchPoint(
            eps=eps, gamma=gamma, mu=mu, psi=psi, newton_residual=res,
            symmetry_residuals=_symmetry_residuals(prob_solved, psi),
            stability_indicator=_smallest_singular_value(
                lu, 2 * m + 3),
            phase_node=seed.phase_node,
        ))
        steps += 1
        ds = min(ds * 1.3, cfg.max_step)
        if direction * (new_param - param_target) >= -1e-14:
            break
    if cfg.detect_bifurcations:
        branch.bifurcation_markers = detect_bifurcation(branch, problem, cfg)
    return branch


def _arclength_newton(problem, param_name, z, tangent, z_anchor, cfg,
                      base_eps, base_gamma, phase_node, family):
    m = problem.grid.size
    tol = None
    for it in range(cfg.max_newton):
        param = float(z[-1])
        prob_at, eps, gamma, family = _problem_for(
            problem, param_name, param, base_eps, base_gamma, family)
        if tol is None:
            tol = cfg.newton_tol * (1.0 + prob_at.norm_a1)
        psi_vals = z[:m] + 1j * z[m:2 * m]
        mu = complex(z[2 * m], z[2 * m + 1])
        f, c1, c2 = _residual_parts(prob_at, eps, psi_vals, mu, phase_node)
        c3 = float(tangent @ (z - z_anchor))
        res = float(np.sqrt(f.norm() ** 2 + c1**2 + c2**2 + c3**2))
        if res <= tol and abs(c1) <= 1e-10 and abs(c2) <= 1e-10 and it > 0:
            return z, res, lu, family
        fcol = _dF_dparam(prob_at, param_name, eps, psi_vals, family)
        jac = _augmented_jacobian(prob_at, eps, psi_vals, mu, phase_node,
                                  extra_col=(fcol, tangent))
        lu = _factorize(jac, check_singular=False)
        rhs = np.concatenate([f.values.real, f.values.imag, [c1, c2, c3]])
        delta = lu.solve(-rhs)
        z = z + delta
    raise NewtonDiverged("arclength corrector did not converge")


def _dF_dparam(problem, param_name, eps, psi_vals, family):
    if param_name == "eps":
        fv = eval_f(problem.nonlinearity,
                    GridFunction(problem.grid, psi_vals)).values
        return np.concatenate([-fv.real, -fv.imag])
    dav = family.da @ psi_vals
    return np.concatenate([dav.real, dav.imag])


# ---------------------------------------------------------------------------
# bifurcation detection and branch switching
# ---------------------------------------------------------------------------

def detect_bifurcation(branch: Branch, problem: DiscretizedProblem | None = None,
                       cfg: ContinuationConfig | None = None) -> list:
    """Parameter values where the stability indicator dips below threshold.

    The threshold is 1e-6 * ||A||_1.  With a problem (and config) given, each
    dip is refined by ternary search on re-solved intermediate parameters to
    a bracket width <= 1e-3; otherwise the recorded samples are interpolated.
    """
    pts = [p for p in branch.points if np.isfinite(p.stability_indicator)]
    if len(pts) < 3:
        return []
    thr = 1e-6 * branch.norm_a1
    params = np.array([p.parameter(branch.parameter_name) for p in pts])
    svs = np.array([p.stability_indicator for p in pts])
    markers = []
    for k in range(1, len(pts) - 1):
        if not (svs[k] < svs[k - 1] and svs[k] <= svs[k + 1]):
            continue
        level = min(svs[k - 1], svs[k + 1])
        # candidate dips: sampled crossing, or a pronounced local minimum
        # whose true bottom may fall between samples
        if svs[k] >= thr and svs[k] > 0.5 * level:
            continue
        lo, hi = params[k - 1], params[k + 1]
        if problem is not None and cfg is not None:
            refined, bottom = _refine_dip(branch, problem, cfg, lo, hi)
            if bottom < thr:
                markers.append(refined)
        elif svs[k] < thr:
            markers.append(float(params[k]))
    return markers


def _solve_at(branch, problem, cfg, param):
    """Newton solution at an off-sample parameter, seeded by interpolation."""
    name = branch.parameter_name
    params = branch.parameters()
    pts = branch.points
    order = np.argsort(np.abs(params - param))
    near, far = pts[order[0]], pts[order[1] if len(order) > 1 else order[0]]
    base = pts[0]
    prob_at, eps, gamma, _ = _problem_for(problem, name, param,
                                          base.eps, base.gamma)
    psi0, mu0 = _predict([far, near], name, param)
    psi_vals, mu, res, lu = _newton_solve(prob_at, eps, psi0, mu0, cfg,
                                          phase_node=base.phase_node)
    sv = _smallest_singular_value(lu, 2 * prob_at.grid.size + 2)
    return psi_vals, mu, res, sv, prob_at, eps, gamma


def _refine_dip(branch, problem, cfg, lo, hi):
    """Ternary search for the indicator minimum (V-shaped near a bifurcation).

    Returns (location, bottom value); the bracket is narrowed to <= 1e-3.
    """
    bottom = np.inf
    for _ in range(40):
        if abs(hi - lo) <= 1e-3:
            break
        p1 = lo + (hi - lo) / 3
        p2 = hi - (hi - lo) / 3
        try:
            s1 = _solve_at(branch, problem, cfg, p1)[3]
            s2 = _solve_at(branch, problem, cfg, p2)[3]
        except (NewtonDiverged, NleigError):
            break
        bottom = min(bottom, s1, s2)
        if s1 <= s2:
            hi = p2
        else:
            lo = p1
    return float((lo + hi) / 2), float(bottom)


def _null_direction(lu, n, iters=30, seed=6):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    for _ in range(iters):
        t = lu.solve(v, trans="T")
        y = lu.solve(t)
        ny = np.linalg.norm(y)
        if ny == 0.0 or not np.isfinite(ny):
            return v
        v = y / ny
    return v


def switch_branch(problem: DiscretizedProblem, branch: Branch, marker: float,
                  cfg: ContinuationConfig, param_target: float | None = None,
                  child_id: str | None = None) -> Branch:
    """Start the secondary branch emerging at a detected marker.

    Perturbs the marker solution along the near-null direction of the
    bordered Jacobian (both signs, amplitude = step size), corrects slightly
    beyond the marker, and continues the accepted child.  Symmetry residuals
    of the child are recorded, never enforced.
    """
    name = branch.parameter_name
    try:
        psi_vals, mu, res, sv, prob_at, eps, gamma = _solve_at(
            branch, problem, cfg, marker)
    except (NewtonDiverged, NleigError) as exc:
        raise SwitchFailed(f"could not re-solve the parent at the marker: {exc}")
    m = prob_at.grid.size
    node = branch.points[0].phase_node
    f, c1, c2 = _residual_parts(prob_at, eps, psi_vals, mu, node)
    jac = _augmented_jacobian(prob_at, eps, psi_vals, mu, node)
    lu = _factorize(jac, check_singular=False)
    null = _null_direction(lu, 2 * m + 2)
    amp = cfg.step

    # fold guard: at a fold the near-null direction is the branch tangent
    # itself, so there is no transversal branch to switch onto
    params = branch.parameters()
    order = np.argsort(np.abs(params - marker))
    pa, pb = branch.points[order[0]], branch.points[order[1]]
    tangent = np.concatenate([
        (pb.psi.values - pa.psi.values).real,
        (pb.psi.values - pa.psi.values).imag,
        [pb.mu.real - pa.mu.real, pb.mu.imag - pa.mu.imag],
    ])
    tn = np.linalg.norm(tangent)
    if tn > 0:
        alignment = abs(float(tangent @ null)) / tn
        if alignment > 0.5:
            raise SwitchFailed(
                f"marker {marker:.6f} is a fold: the critical direction is "
                f"tangent to the branch (alignment {alignment:.2f})")
    if param_target is None:
        params = branch.parameters()
        param_target = float(params[-1])
    forward = np.sign(param_target - marker) or 1.0
    base = branch.points[0]

    # transversal capture: prescribe the displacement along the null
    # direction (orthogonal to the parent branch) and let the parameter
    # float -- the arclength corrector with the null vector as the tangent.
    # The offset is then grown in steps (amplitude continuation) so the
    # released seed sits outside the parent's Newton basin.
    null_ext = np.concatenate([null, [0.0]])
    null_ext /= np.linalg.norm(null_ext)
    z_marker = np.concatenate([psi_vals.real, psi_vals.imag,
                               [mu.real, mu.imag, marker]])
    def _release(z_child):
        """Drop the amplitude constraint; None when it collapses to the parent."""
        child_param = float(z_child[-1])
        prob_new, eps_n, gamma_n, _ = _problem_for(problem, name, child_param,
                                                   base.eps, base.gamma)
        try:
            child_vals, child_mu, child_res, child_lu = _newton_solve(
                prob_new, eps_n, z_child[:m] + 1j * z_child[m:2 * m],
                complex(z_child[2 * m], z_child[2 * m + 1]), cfg,
                phase_node=node)
        except (NewtonDiverged, NleigError):
            return None
        if (not cfg.complex_mu_allowed
                and abs(child_mu.imag) > 1e-8 * (1 + abs(child_mu))):
            return None
        z_rel = np.concatenate([child_vals.real, child_vals.imag,
                                [child_mu.real, child_mu.imag, child_param]])
        offset_rel = abs(float(null_ext @ (z_rel - z_marker)))
        if offset_rel < 0.05 * amp:
            return None  # parent is null-orthogonal: offset died out
        psi = GridFunction(prob_new.grid, child_vals)
        point = BranchPoint(
            eps=eps_n, gamma=gamma_n, mu=complex(child_mu), psi=psi,
            newton_residual=child_res,
            symmetry_residuals=_symmetry_residuals(prob_new, psi),
            stability_indicator=_smallest_singular_value(child_lu, 2 * m + 2),
            phase_node=node,
        )
        return point, child_param, offset_rel

    for sign in (+1.0, -1.0):
        offset = sign * amp
        z_prev = z_marker
        best = None
        for _ in range(6):  # amplitude continuation along the null direction
            z0 = z_prev + (offset - float(null_ext @ (z_prev - z_marker))) \
                * null_ext
            try:
                z_next, _, _, _ = _arclength_newton(
                    problem, name, z0, null_ext, z0, cfg,
                    base.eps, base.gamma, node, None)
            except (NewtonDiverged, NleigError):
                break
            z_prev = z_next
            offset *= 2.0
            released = _release(z_next)
            if released is not None and (best is None or released[2] > best[2]):
                best = released
            # a healthy transversal amplitude keeps the child out of the
            # parent's Newton basin during the subsequent continuation
            if best is not None and best[2] >= 0.8 * amp:
                break
        if best is None:
            continue
        seed, child_param, _ = best
        target = param_target if forward * (param_target - child_param) > 0 \
            else child_param
        # gentle initial steps keep a weakly-broken child out of the
        # parent's basin; the adaptive growth recovers the cruising step
        child_cfg = dataclasses.replace(
            cfg, step=max(cfg.step / 5.0, 2.0 * cfg.min_step),
            detect_bifurcations=False)
        child = continue_branch(problem, seed, child_cfg, name, target,
                                branch_id=child_id or f"{branch.branch_id}b",
                                parent_id=branch.branch_id)
        return child
    raise SwitchFailed(f"no transversal branch found at marker {marker:.6f}")


# ---------------------------------------------------------------------------
# eigenvalue collisions (gamma-continuation of two real branches)
# ---------------------------------------------------------------------------

def locate_collision(branch_a: Branch, branch_b: Branch,
                     gap_tol: float = 1e-3) -> float:
    """Estimate the parameter where two real branches collide.

    The second branch's eigenvalue is interpolated onto the first branch's
    parameter samples; the collision is the first parameter where the gap
    |mu_a - mu_b| dips below gap_tol (past the collision the corrector
    follows the merged complex branch, so the gap collapses there).  If the
    sampled gap never closes, the square-root merging law
    gap^2 ~ c (p* - p) is extrapolated from the last samples.
    """
    pa = branch_a.parameters()
    pb = branch_b.parameters()
    lo = max(pa.min(), pb.min())
    hi = min(pa.max(), pb.max())
    sel = (pa >= lo - 1e-12) & (pa <= hi + 1e-12)
    if np.count_nonzero(sel) < 3:
        raise NleigError("branches overlap on too few parameter values")
    order = np.argsort(pb)
    mus_b = branch_b.mus()[order]
    p_common = pa[sel]
    mu_a = branch_a.mus()[sel]
    mu_b = (np.interp(p_common, pb[order], mus_b.real)
            + 1j * np.interp(p_common, pb[order], mus_b.imag))
    gaps = np.abs(mu_a - mu_b)
    below = np.nonzero(gaps < gap_tol)[0]
    if len(below):
        k = int(below[0])
        if k == 0:
            return float(p_common[0])
        # interpolate the crossing of gap_tol inside the bracketing step
        g0, g1 = gaps[k - 1], gaps[k]
        t = (g0 - gap_tol) / max(g0 - g1, 1e-300)
        return float(p_common[k - 1] + t * (p_common[k] - p_common[k - 1]))
    k = min(6, len(p_common))
    slope, intercept = np.polyfit(p_common[-k:], gaps[-k:] ** 2, 1)
    if slope >= 0:
        raise NleigError("gap is not closing; no collision ahead")
    return float(-intercept / slope)


def refine_collision(problem: DiscretizedProblem, branch: Branch,
                     cfg: ContinuationConfig, width: float = 1e-3,
                     im_tol: float = 1e-6) -> float:
    """Bisect the onset of a complex eigenvalue pair along one branch.

    Requires a branch whose recorded points pass from real mu to a complex
    pair (the natural corrector follows the merged branch through the
    collision).  The returned parameter brackets the collision to ``width``.
    """
    params = branch.parameters()
    ims = np.abs(branch.mus().imag)
    complex_idx = np.nonzero(ims > im_tol)[0]
    real_idx = np.nonzero(ims <= im_tol)[0]
    if not len(complex_idx) or not len(real_idx):
        raise NleigError("branch does not cross from real to complex mu")
    lo = float(np.max(params[real_idx]))
    hi = float(np.min(params[complex_idx]))
    if hi <= lo:
        raise NleigError("recorded branch has interleaved real/complex points")
    for _ in range(60):
        if hi - lo <= width:
            break
        mid = (lo + hi) / 2
        try:
            _, mu, _, _, _, _, _ = _solve_at(branch, problem, cfg, mid)
        except (NewtonDiverged, NleigError):
            break
        if abs(mu.imag) > im_tol:
            hi = mid
        else:
            lo = mid
    return float((lo + hi) / 2)
