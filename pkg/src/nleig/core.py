"""Grids, complex grid functions, weighted inner products and sparse solves.

All types are immutable after construction and all operations are pure, so
everything here is safe to share across threads.

The inner product is the weighted one

    <u, v> = sum_i w_i u_i conj(v_i),

conjugate-linear in the second argument.  Weights are quadrature weights
(trapezoid in 1D, tensor products in 2D, unit weights on lattices), which
makes the discrete adjoint of an operator consistent with the continuum
adjoint.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import GridMismatch, SingularSystem

_PIVOT_RATIO_TOL = 1e-10


@dataclass(frozen=True)
class Grid:
    """Discretization grid with quadrature weights and named reflections.

    Attributes
    ----------
    dim : 1 or 2 (a lattice counts as dim 1 with integer coordinates)
    nodes : (M, dim) float array of node coordinates
    weights : (M,) strictly positive quadrature weights
    boundary_kind : "dirichlet" | "robin" | "quasi_periodic" | "lattice"
    boundary_param : complex Robin coefficient, float quasi-periodicity k,
        or None
    reflection_maps : name -> involutive node permutation; each permutation
        maps node i to the node sitting exactly at the reflected coordinate
        (grids are built symmetric, so the reflected coordinate is a node)
    measure : what the weights integrate a constant to (domain measure)
    """

    dim: int
    nodes: np.ndarray
    weights: np.ndarray
    boundary_kind: str
    boundary_param: object = None
    reflection_maps: dict = field(default_factory=dict)
    measure: float = 0.0

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim == 1:
            nodes = nodes.reshape(-1, 1)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.shape[0] != weights.shape[0]:
            raise GridMismatch("node and weight counts differ")
        if np.any(weights <= 0):
            raise GridMismatch("quadrature weights must be strictly positive")
        for name, perm in self.reflection_maps.items():
            perm = np.asarray(perm)
            if not np.array_equal(perm[perm], np.arange(len(perm))):
                raise GridMismatch(f"reflection map {name!r} is not an involution")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    def node_index(self, point) -> int:
        """Index of the node nearest to ``point``."""
        point = np.atleast_1d(np.asarray(point, dtype=float))
        return int(np.argmin(np.sum((self.nodes - point[None, :]) ** 2, axis=1)))

    def function(self, values) -> "GridFunction":
        return GridFunction(self, values)

    def zeros(self) -> "GridFunction":
        return GridFunction(self, np.zeros(self.size, dtype=complex))


def reflection_permutation(nodes: np.ndarray, signs, center=None) -> np.ndarray:
    """Permutation sending each node to the node at the reflected coordinate.

    ``signs`` holds +-1 per axis; axis j is mapped to ``2*center_j - x_j``
    if signs[j] == -1 and kept otherwise.  Raises if some reflected
    coordinate is not itself a node, i.e. the grid is not symmetric under
    the requested reflection.
    """
    nodes = np.asarray(nodes, dtype=float)
    if nodes.ndim == 1:
        nodes = nodes.reshape(-1, 1)
    m, dim = nodes.shape
    signs = np.asarray(signs, dtype=float)
    if center is None:
        center = np.zeros(dim)
    center = np.asarray(center, dtype=float)
    reflected = np.where(signs[None, :] < 0, 2 * center[None, :] - nodes, nodes)
    # matching sorted orders pair each node with its reflected partner
    keys_n = np.lexsort(nodes.T[::-1])
    keys_r = np.lexsort(reflected.T[::-1])
    perm = np.empty(m, dtype=int)
    perm[keys_r] = keys_n
    scale = max(1.0, float(np.max(np.abs(nodes))))
    if np.max(np.abs(nodes[perm] - reflected)) > 1e-9 * scale:
        raise GridMismatch("grid is not symmetric under the requested reflection")
    return perm


class GridFunction:
    """Complex-valued function on a grid (one value per node)."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values):
        values = np.asarray(values, dtype=complex).copy()
        if values.shape != (grid.size,):
            raise GridMismatch(
                f"value count {values.shape} does not match grid size {grid.size}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def __setattr__(self, name, value):
        raise AttributeError("GridFunction is immutable")

    def __reduce__(self):
        return (GridFunction, (self.grid, np.asarray(self.values)))

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.grid, values)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        _check_same_grid(self, other)
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        _check_same_grid(self, other)
        return GridFunction(self.grid, self.values - other.values)

    def __mul__(self, scalar) -> "GridFunction":
        return GridFunction(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "GridFunction":
        return GridFunction(self.grid, -self.values)

    def norm(self) -> float:
        w = self.grid.weights
        return float(np.sqrt(np.sum(w * np.abs(self.values) ** 2)))

    def __repr__(self):
        return f"GridFunction(M={self.grid.size}, norm={self.norm():.3e})"


def _check_same_grid(u: GridFunction, v: GridFunction):
    if u.grid is not v.grid and (
        u.grid.size != v.grid.size or not np.array_equal(u.grid.nodes, v.grid.nodes)
    ):
        raise GridMismatch("grid functions live on different grids")


def inner_product(u: GridFunction, v: GridFunction) -> complex:
    """Weighted inner product sum_i w_i u_i conj(v_i)."""
    _check_same_grid(u, v)
    return complex(np.sum(u.grid.weights * u.values * np.conj(v.values)))


def norm(u: GridFunction) -> float:
    return u.norm()


@dataclass(frozen=True)
class SparseOperator:
    """Square sparse complex operator attached to a grid."""

    matrix: sp.csr_matrix
    grid: Grid

    def __post_init__(self):
        mat = sp.csr_matrix(self.matrix, dtype=complex)
        if mat.shape[0] != mat.shape[1]:
            raise GridMismatch("operator must be square")
        if mat.shape[0] != self.grid.size:
            raise GridMismatch("operator dimension does not match grid")
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def norm_1(self) -> float:
        """Matrix 1-norm (max column absolute sum)."""
        return float(np.max(np.abs(self.matrix).sum(axis=0)))


def apply(aop: SparseOperator, u: GridFunction) -> GridFunction:
    """Matrix-vector product A u."""
    if aop.dim != u.grid.size:
        raise GridMismatch("operator and grid function dimensions differ")
    return GridFunction(u.grid, aop.matrix @ u.values)


def adjoint(aop: SparseOperator) -> SparseOperator:
    """Adjoint with respect to the weighted inner product.

    Entrywise A*_{ij} = (w_j / w_i) conj(A_{ji}), which realizes
    <A u, v> = <u, A* v> exactly.
    """
    w = aop.grid.weights
    mat = sp.diags(1.0 / w) @ aop.matrix.conj().T.tocsr() @ sp.diags(w)
    return SparseOperator(mat.tocsr(), aop.grid)


def _factorize(matrix: sp.spmatrix, check_singular: bool = True):
    """Sparse LU with an explicit numerical-singularity guard.

    The input dtype is preserved (real systems factorize at half the cost).
    """
    try:
        lu = splu(sp.csc_matrix(matrix))
    except RuntimeError as exc:  # exactly singular factorization
        raise SingularSystem(f"LU factorization failed: {exc}", pivot=0.0) from exc
    if check_singular:
        diag = np.abs(lu.U.diagonal())
        dmax = float(np.max(diag)) if diag.size else 0.0
        dmin = float(np.min(diag)) if diag.size else 0.0
        if dmax == 0.0 or dmin / dmax < _PIVOT_RATIO_TOL:
            raise SingularSystem(
                f"matrix numerically singular (pivot ratio {dmin / max(dmax, 1e-300):.2e})",
                pivot=dmin,
            )
    return lu


def direct_solve(aop: SparseOperator, shift: complex, rhs: GridFunction) -> GridFunction:
    """Solve (A - shift) u = rhs by sparse LU with one refinement step."""
    if aop.dim != rhs.grid.size:
        raise GridMismatch("operator and right-hand side dimensions differ")
    mat = (aop.matrix - shift * sp.identity(aop.dim, format="csr")).tocsc()
    lu = _factorize(mat)
    u = lu.solve(rhs.values)
    # one step of iterative refinement pushes the backward error to rounding
    res = rhs.values - mat @ u
    u = u + lu.solve(res)
    out = GridFunction(rhs.grid, u)
    rnorm = GridFunction(rhs.grid, rhs.values - mat @ u).norm()
    scale = rhs.norm() + float(np.max(np.abs(mat).sum(axis=0))) * out.norm()
    if rnorm > 1e-12 * max(scale, 1e-300):
        raise SingularSystem(
            f"direct solve residual {rnorm:.2e} exceeds 1e-12 of problem scale",
            pivot=float(np.min(np.abs(lu.U.diagonal()))),
        )
    return out


class BorderedSystem:
    """Augmented system realizing the inverse of the projected operator.

    Solves, for given (rhs, rhs_scalar),

        (A - shift) u + lam * column = rhs
        <u, row>                     = rhs_scalar

    as one sparse (M+1) x (M+1) solve.  When rhs lies in the range of the
    projected operator and rhs_scalar = 0, u is the unique solution with
    zero component along the border column.
    """

    __slots__ = ("operator", "shift", "column", "row", "corner", "_lu",
                 "_matrix", "_norm1")

    def __init__(self, operator: SparseOperator, shift: complex,
                 column: GridFunction, row: GridFunction, corner: complex = 0.0):
        if column.norm() == 0.0 or row.norm() == 0.0:
            raise GridMismatch("border vectors must be nonzero")
        _check_same_grid(column, row)
        if operator.dim != column.grid.size:
            raise GridMismatch("operator and border dimensions differ")
        object.__setattr__(self, "operator", operator)
        object.__setattr__(self, "shift", complex(shift))
        object.__setattr__(self, "column", column)
        object.__setattr__(self, "row", row)
        object.__setattr__(self, "corner", complex(corner))
        m = operator.dim
        base = operator.matrix - shift * sp.identity(m, format="csr")
        wrow = column.grid.weights * np.conj(row.values)
        aug = sp.bmat(
            [[base, column.values.reshape(m, 1)],
             [wrow.reshape(1, m), np.array([[self.corner]])]],
            format="csc",
        )
        object.__setattr__(self, "_matrix", aug)
        object.__setattr__(self, "_norm1", float(np.max(np.abs(aug).sum(axis=0))))
        object.__setattr__(self, "_lu", _factorize(aug))

    def __setattr__(self, name, value):
        raise AttributeError("BorderedSystem is immutable")


def bordered_solve(system: BorderedSystem, rhs: GridFunction,
                   rhs_scalar: complex = 0.0):
    """Solve the bordered system; returns (u, lam)."""
    m = system.operator.dim
    b = np.empty(m + 1, dtype=complex)
    b[:m] = rhs.values
    b[m] = rhs_scalar
    x = system._lu.solve(b)
    res = b - system._matrix @ x
    x = x + system._lu.solve(res)
    rnorm = float(np.linalg.norm(b - system._matrix @ x))
    scale = float(np.linalg.norm(b)) + system._norm1 * float(np.linalg.norm(x))
    if rnorm > 1e-10 * max(scale, 1e-300):
        raise SingularSystem(f"bordered solve residual {rnorm:.2e} too large")
    return GridFunction(rhs.grid, x[:m]), complex(x[m])


# ---------------------------------------------------------------------------
# grid builders
# ---------------------------------------------------------------------------

def uniform_grid_1d(half_width: float, n: int, boundary: str = "robin",
                    robin_coefficient: complex = 0.0, quasi_k: float = 0.0) -> Grid:
    """Uniform 1D grid on (-half_width, half_width), symmetric about 0.

    * robin: nodes include both endpoints, trapezoid weights
    * dirichlet: interior nodes only, uniform weights h (hat-function mass)
    * quasi_periodic: cell-centered nodes, uniform weights h
    """
    r = float(half_width)
    if boundary == "robin":
        nodes = np.linspace(-r, r, n)
        h = nodes[1] - nodes[0]
        weights = np.full(n, h)
        weights[0] = weights[-1] = h / 2
        measure = 2 * r
        param = complex(robin_coefficient)
    elif boundary == "dirichlet":
        h = 2 * r / (n + 1)
        nodes = -r + h * np.arange(1, n + 1)
        weights = np.full(n, h)
        measure = n * h
        param = None
    elif boundary == "quasi_periodic":
        h = 2 * r / n
        nodes = -r + h * (np.arange(n) + 0.5)
        weights = np.full(n, h)
        measure = 2 * r
        param = float(quasi_k)
    else:
        raise GridMismatch(f"unknown 1D boundary kind {boundary!r}")
    nodes = nodes - (nodes[0] + nodes[-1]) / 2  # exact symmetry about 0
    nodes2 = nodes.reshape(-1, 1)
    perm = reflection_permutation(nodes2, [-1])
    return Grid(1, nodes2, weights, boundary, param, {"P": perm}, measure)


def tensor_grid_2d(half_width: float, n: int) -> Grid:
    """Interior Dirichlet tensor grid on [-half_width, half_width]^2.

    Row-major node ordering: index = i * n + j with coordinates (x_i, y_j).
    """
    r = float(half_width)
    h = 2 * r / (n + 1)
    axis = -r + h * np.arange(1, n + 1)
    axis = axis - (axis[0] + axis[-1]) / 2
    xx, yy = np.meshgrid(axis, axis, indexing="ij")
    nodes = np.column_stack([xx.ravel(), yy.ravel()])
    weights = np.full(n * n, h * h)
    maps = {
        "P": reflection_permutation(nodes, [-1, -1]),
        "P1": reflection_permutation(nodes, [-1, 1]),
        "P2": reflection_permutation(nodes, [1, -1]),
    }
    return Grid(2, nodes, weights, "dirichlet", None, maps, (n * h) ** 2)


def lattice_grid(n_sites: int) -> Grid:
    """Finite 1D lattice with sites 1..n_sites and unit weights."""
    nodes = np.arange(1, n_sites + 1, dtype=float).reshape(-1, 1)
    weights = np.ones(n_sites)
    center = (n_sites + 1) / 2
    perm = reflection_permutation(nodes, [-1], center=[center])
    return Grid(1, nodes, weights, "lattice", None, {"P": perm}, float(n_sites))


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def grid_function_to_json(u: GridFunction) -> dict:
    """JSON object {"dim", "nodes", "re", "im"} with values in node order."""
    return {
        "dim": int(u.grid.dim),
        "nodes": [list(map(float, row)) for row in u.grid.nodes],
        "re": [float(x) for x in u.values.real],
        "im": [float(x) for x in u.values.imag],
    }


def grid_function_from_json(data: dict, grid: Grid | None = None) -> GridFunction:
    """Rebuild a GridFunction; verifies node agreement when a grid is given."""
    values = np.asarray(data["re"], dtype=float) + 1j * np.asarray(data["im"], dtype=float)
    nodes = np.atleast_2d(np.asarray(data["nodes"], dtype=float))
    if grid is None:
        m = len(values)
        grid = Grid(int(data["dim"]), nodes, np.ones(m), "lattice", None, {}, float(m))
    else:
        if grid.size != len(values) or not np.allclose(grid.nodes, nodes, atol=1e-12):
            raise GridMismatch("serialized nodes do not match the target grid")
    return GridFunction(grid, values)
