"""Problem builders and closed-form oracles.

Models
------
* ``toy_robin``  -d^2/dx^2 on (-pi/2, pi/2) with complex Robin boundary
  condition psi'(+-r) + i*alpha*psi(+-r) = 0 (ghost-node elimination,
  second order); exact spectrum {alpha^2} union {n^2}.
* ``sho6_2d``    -Laplace + (x1^2+x2^2)/2 + 2i*gamma*x1/(x1^2+x2^2+2) on
  [-8, 8]^2, Dirichlet.
* ``gauss9_2d``  -Laplace + sum of four complex Gaussian wells on
  [-13, 13]^2, Dirichlet.
* ``dnls``       2N-site hopping chain with staggered gain/loss
  i*gamma*(-1)^n; exact spectrum +-sqrt(4 cos^2(pi j / (1+2N)) - gamma^2).
* ``two_delta``  -d^2/dx^2 with complex delta wells of strength -(1 -+ i*gamma)
  at x = +-tau (diagonal coefficient / h at the nearest node, first order).
* ``wire``       -d^2/dx^2 - i*x*I on (-1, 1), Dirichlet, with the combined
  local/nonlocal cubic nonlinearity.
* ``per_bloch``  -d^2/dx^2 - cos^2(x) - i*gamma*sin(2x) on (-pi, pi) with
  k-quasi-periodic wraparound (cell-centered nodes).

All grids are built symmetric under the model's declared reflections, and
every declared symmetry is gated at build time against the assembled
operator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import bisect

from .core import (Grid, GridFunction, SparseOperator, lattice_grid,
                   tensor_grid_2d, uniform_grid_1d)
from .errors import (ConfigError, DegenerateParameter, NleigError, NoBoundState,
                     NonSymmetricGrid, UnknownModel)
from .nonlinearity import NonlinearitySpec
from .symmetry import SymmetryOp, from_reflection, operator_commutation_residual

MODEL_NAMES = ("toy_robin", "sho6_2d", "gauss9_2d", "dnls", "two_delta",
               "wire", "per_bloch")

_DEFAULT_HALF_WIDTH = {
    "toy_robin": np.pi / 2,
    "sho6_2d": 8.0,
    "gauss9_2d": 13.0,
    "two_delta": 15.0,
    "wire": 1.0,
    "per_bloch": np.pi,
}

_DEFAULT_RESOLUTION = {
    "toy_robin": 2048,
    "sho6_2d": 161,
    "gauss9_2d": 131,
    "two_delta": 2001,
    "wire": 1001,
    "per_bloch": 513,
}

_DEFAULT_NONLINEARITY = {
    "dnls": "dnls_cubic",
    "wire": "wire_combo",
}

_COMMUTATION_GATE = 1e-10


@dataclass(frozen=True)
class ModelSpec:
    """Complete description of a problem instance."""

    name: str
    params: dict = field(default_factory=dict)
    n: int | None = None
    half_width: float | None = None
    nonlinearity: str | None = None
    symmetric_grid: bool = True

    def __post_init__(self):
        if self.name not in MODEL_NAMES:
            raise UnknownModel(f"unknown model {self.name!r}")
        n = self.n if self.n is not None else _DEFAULT_RESOLUTION.get(self.name)
        if self.name == "dnls":
            if int(self.params.get("N", 0)) < 1:
                raise ConfigError("dnls requires integer parameter N >= 1")
        elif n is None or n < 16:
            raise ConfigError(f"resolution must be >= 16 per axis, got {n}")

    @property
    def resolution(self) -> int:
        return self.n if self.n is not None else _DEFAULT_RESOLUTION.get(self.name, 0)

    @property
    def domain_half_width(self) -> float:
        if self.half_width is not None:
            return float(self.half_width)
        return _DEFAULT_HALF_WIDTH.get(self.name, 0.0)

    def require(self, *names):
        missing = [p for p in names if p not in self.params]
        if missing:
            raise ConfigError(f"model {self.name!r} missing parameters {missing}")
        return [self.params[p] for p in names]


@dataclass(frozen=True)
class DiscretizedProblem:
    """Assembled operator + grid + nonlinearity + declared symmetries."""

    operator: SparseOperator
    grid: Grid
    nonlinearity: NonlinearitySpec
    symmetries: list
    spec: ModelSpec
    phase_node: int
    norm_a1: float

    def symmetry(self, name: str) -> SymmetryOp:
        for op in self.symmetries:
            if op.name == name:
                return op
        raise KeyError(f"problem declares no symmetry {name!r}")

    @property
    def antilinear_symmetries(self):
        return [op for op in self.symmetries if op.conjugate]

    @property
    def linear_symmetries(self):
        return [op for op in self.symmetries if not op.conjugate]


def _laplacian_1d(n: int, h: float) -> sp.csr_matrix:
    main = np.full(n, 2.0 / h**2)
    off = np.full(n - 1, -1.0 / h**2)
    return sp.diags([off, main, off], [-1, 0, 1], format="csr", dtype=complex)


def _nonlinearity_for(spec: ModelSpec) -> NonlinearitySpec:
    kind = spec.nonlinearity or _DEFAULT_NONLINEARITY.get(spec.name, "cubic")
    return NonlinearitySpec(kind)


def build_model(spec: ModelSpec) -> DiscretizedProblem:
    """Assemble the operator, grid, nonlinearity and symmetry list."""
    builder = {
        "toy_robin": _build_toy_robin,
        "sho6_2d": _build_sho6_2d,
        "gauss9_2d": _build_gauss9_2d,
        "dnls": _build_dnls,
        "two_delta": _build_two_delta,
        "wire": _build_wire,
        "per_bloch": _build_per_bloch,
    }[spec.name]
    grid, matrix, sym_descr, phase_point = builder(spec)
    if not spec.symmetric_grid and sym_descr:
        raise NonSymmetricGrid(
            f"model {spec.name!r} declares symmetries; the grid must stay symmetric"
        )
    operator = SparseOperator(matrix, grid)
    symmetries = [from_reflection(grid, m, conj, name, sign)
                  for (name, m, conj, sign) in sym_descr]
    norm_a1 = operator.norm_1()
    for op in symmetries:
        res = operator_commutation_residual(op, operator, probes=8, seed=7)
        if res > _COMMUTATION_GATE:
            raise NleigError(
                f"declared symmetry {op.name!r} fails the commutation gate "
                f"({res:.2e} > {_COMMUTATION_GATE:.0e})"
            )
    return DiscretizedProblem(
        operator=operator,
        grid=grid,
        nonlinearity=_nonlinearity_for(spec),
        symmetries=symmetries,
        spec=spec,
        phase_node=grid.node_index(phase_point),
        norm_a1=norm_a1,
    )


def _build_toy_robin(spec: ModelSpec):
    (alpha,) = spec.require("alpha")
    gamma = 1j * float(alpha)
    n = spec.resolution
    grid = uniform_grid_1d(spec.domain_half_width, n, "robin", robin_coefficient=gamma)
    h = grid.nodes[1, 0] - grid.nodes[0, 0]
    mat = _laplacian_1d(n, h).tolil()
    # ghost-node elimination of psi'(+-r) + gamma psi(+-r) = 0, second order
    mat[0, 0] = 2.0 * (1.0 - h * gamma) / h**2
    mat[0, 1] = -2.0 / h**2
    mat[n - 1, n - 1] = 2.0 * (1.0 + h * gamma) / h**2
    mat[n - 1, n - 2] = -2.0 / h**2
    syms = [("PT", "P", True, None)]
    return grid, mat.tocsr(), syms, [0.0]


def _build_sho6_2d(spec: ModelSpec):
    (gamma,) = spec.require("gamma")
    n = spec.resolution
    grid = tensor_grid_2d(spec.domain_half_width, n)
    x1 = grid.nodes[:, 0]
    x2 = grid.nodes[:, 1]
    h = 2 * spec.domain_half_width / (n + 1)
    lap1 = _laplacian_1d(n, h)
    eye = sp.identity(n, format="csr", dtype=complex)
    v = 0.5 * (x1**2 + x2**2) + 1j * gamma * x1 * 2.0 / (x1**2 + x2**2 + 2.0)
    mat = sp.kron(lap1, eye) + sp.kron(eye, lap1) + sp.diags(v)
    syms = [("PT", "P", True, None), ("P1T", "P1", True, None), ("P2", "P2", False, None)]
    return grid, mat.tocsr(), syms, [0.0, 0.0]


def _build_gauss9_2d(spec: ModelSpec):
    gamma, v0, a = spec.require("gamma", "v0", "a")
    n = spec.resolution
    grid = tensor_grid_2d(spec.domain_half_width, n)
    x1 = grid.nodes[:, 0]
    x2 = grid.nodes[:, 1]
    h = 2 * spec.domain_half_width / (n + 1)
    lap1 = _laplacian_1d(n, h)
    eye = sp.identity(n, format="csr", dtype=complex)
    g = lambda s1, s2: np.exp(-((x1 - s1) ** 2) - (x2 - s2) ** 2)
    v = (-3.0 * v0 * (g(a, a) + g(-a, a))
         - 2.0 * v0 * (g(a, -a) + g(-a, -a))
         - 2j * gamma * (g(a, a) - g(-a, a))
         - 1j * gamma * (g(a, -a) - g(-a, -a)))
    mat = sp.kron(lap1, eye) + sp.kron(eye, lap1) + sp.diags(v)
    syms = [("P1T", "P1", True, None)]
    return grid, mat.tocsr(), syms, [0.0, 2.0]


def _build_dnls(spec: ModelSpec):
    big_n = int(spec.params["N"])
    gamma = float(spec.params.get("gamma", 0.0))
    m = 2 * big_n
    grid = lattice_grid(m)
    sites = np.arange(1, m + 1)
    diag = 1j * gamma * (-1.0) ** sites
    off = np.ones(m - 1)
    mat = sp.diags([off, diag, off], [-1, 0, 1], format="csr", dtype=complex)
    syms = [("lattice-PT", "P", True, None)]
    return grid, mat, syms, [(m + 1) / 2]


def _build_two_delta(spec: ModelSpec):
    tau, gamma = spec.require("tau", "gamma")
    n = spec.resolution
    grid = uniform_grid_1d(spec.domain_half_width, n, "dirichlet")
    h = grid.nodes[1, 0] - grid.nodes[0, 0]
    mat = _laplacian_1d(n, h).tolil()
    i_plus = grid.node_index(float(tau))
    i_minus = int(grid.reflection_maps["P"][i_plus])  # exact mirror node
    mat[i_plus, i_plus] += -(1.0 - 1j * gamma) / h
    mat[i_minus, i_minus] += -(1.0 + 1j * gamma) / h
    syms = [("PT", "P", True, None)]
    return grid, mat.tocsr(), syms, [0.0]


def _build_wire(spec: ModelSpec):
    (current,) = spec.require("I")
    n = spec.resolution
    grid = uniform_grid_1d(spec.domain_half_width, n, "dirichlet")
    h = grid.nodes[1, 0] - grid.nodes[0, 0]
    x = grid.nodes[:, 0]
    mat = _laplacian_1d(n, h) + sp.diags(-1j * x * float(current))
    syms = [("PT", "P", True, None)]
    return grid, mat.tocsr(), syms, [0.0]


def _build_per_bloch(spec: ModelSpec):
    gamma, k = spec.require("gamma", "k")
    k = float(k)
    if not (-np.pi < k <= np.pi) or abs(k) < 1e-12 or abs(k - np.pi) < 1e-12:
        raise DegenerateParameter(
            "quasi-periodicity k must lie in (-pi, pi] away from {0, pi}"
        )
    n = spec.resolution
    grid = uniform_grid_1d(spec.domain_half_width, n, "quasi_periodic", quasi_k=k)
    h = 2 * spec.domain_half_width / n
    x = grid.nodes[:, 0]
    v = -np.cos(x) ** 2 - 1j * gamma * np.sin(2 * x)
    mat = (_laplacian_1d(n, h) + sp.diags(v)).tolil()
    mat[0, n - 1] = -np.exp(-1j * k) / h**2
    mat[n - 1, 0] = -np.exp(1j * k) / h**2
    syms = [("PT", "P", True, None)]
    return grid, mat.tocsr(), syms, [0.0]


# ---------------------------------------------------------------------------
# closed-form oracles
# ---------------------------------------------------------------------------

def toy_exact_spectrum(alpha: float, n_max: int) -> list:
    """[alpha^2, 1, 4, ..., n_max^2]; alpha must not be an integer."""
    if abs(alpha - round(alpha)) < 1e-12:
        raise DegenerateParameter(
            f"alpha = {alpha} is an integer: eigenvalue collision, simplicity lost"
        )
    return [alpha**2] + [float(n * n) for n in range(1, n_max + 1)]


def toy_eigenfunction(alpha: float, n: int, grid: Grid) -> GridFunction:
    """Right eigenfunction xi_n of the toy operator, sampled on the grid."""
    x = grid.nodes[:, 0]
    if n == 0:
        vals = np.exp(-1j * alpha * x) / np.sqrt(np.pi)
    else:
        c = np.sqrt(2 / np.pi) * n / np.sqrt(n**2 + alpha**2)
        arg = n * (x + np.pi / 2)
        vals = c * (np.cos(arg) - (1j * alpha / n) * np.sin(arg))
    return GridFunction(grid, vals)


def toy_left_eigenfunction(alpha: float, n: int, grid: Grid) -> GridFunction:
    """Left eigenfunction xi_n^* (biorthogonal normalization)."""
    xi = toy_eigenfunction(alpha, n, grid)
    if n == 0:
        scale = alpha * np.pi / np.sin(alpha * np.pi)
    else:
        scale = (n**2 + alpha**2) / (n**2 - alpha**2)
    return GridFunction(grid, scale * np.conj(xi.values))


def toy_exact_nonlinear_pair(alpha: float, eps: float):
    """Exact ground-state pair: mu = alpha^2 - eps/pi, psi = xi_0 for all eps."""
    if abs(alpha - round(alpha)) < 1e-12:
        raise DegenerateParameter(f"alpha = {alpha} is an integer")
    mu = alpha**2 - eps / np.pi
    return mu, (lambda grid: toy_eigenfunction(alpha, 0, grid))


def dnls_exact_spectrum(big_n: int, gamma: float) -> list:
    """+-sqrt(4 cos^2(pi j / (1+2N)) - gamma^2), j = 1..N, sorted by (Re, Im)."""
    if big_n < 1:
        raise ConfigError("dnls requires N >= 1")
    vals = []
    for j in range(1, big_n + 1):
        c = 4 * np.cos(np.pi * j / (1 + 2 * big_n)) ** 2 - gamma**2
        root = np.sqrt(complex(c))
        vals.extend([root, -root])
    return sorted(vals, key=lambda z: (z.real, z.imag))


def dnls_simplicity_window(big_n: int) -> float:
    """Half-width of the gamma interval on which the spectrum is real simple."""
    return 2 * np.cos(np.pi * big_n / (1 + 2 * big_n))


def twodelta_eigenvalue_roots(tau: float, gamma: float) -> list:
    """Negative eigenvalues mu of the two-delta model from its root equation.

    Solves exp(-4 tau s) = 4/(1+gamma^2) (s^2 - s + gamma^2/4) for s = sqrt(-mu)
    by bracketed bisection on a dense scan of (0, s_max]; existence requires
    (1+gamma^2) tau > 1 and (1+gamma^2) exp(-2 tau) > gamma^2.
    """
    g2 = gamma**2
    if not ((1 + g2) * tau > 1 and (1 + g2) * np.exp(-2 * tau) > g2):
        raise NoBoundState(
            f"no bound state for tau={tau}, gamma={gamma}: existence conditions fail"
        )

    def f(s):
        return 4.0 / (1 + g2) * (s * s - s + g2 / 4.0) - np.exp(-4 * tau * s)

    # all roots lie below the s where the quadratic side exceeds 1
    s_max = (1 + np.sqrt(2.0)) / 2 + 0.1
    grid = np.linspace(1e-12, s_max, 4097)
    vals = f(grid)
    roots = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa == 0.0:
            roots.append(a)
        elif fa * fb < 0:
            roots.append(bisect(f, a, b, xtol=1e-15, rtol=8.9e-16))
    mus = []
    for s in roots:
        if abs(f(s)) > 1e-12:
            raise NleigError(f"bisection root residual {abs(f(s)):.2e} too large")
        mus.append(-s * s)
    return sorted(mus)
