"""Nonlinear eigenvalue bifurcation for discretized problems with antilinear symmetry."""

from .core import (BorderedSystem, Grid, GridFunction, SparseOperator, adjoint,
                   apply, bordered_solve, direct_solve, grid_function_from_json,
                   grid_function_to_json, inner_product, lattice_grid,
                   tensor_grid_2d, uniform_grid_1d)
from .models import (DiscretizedProblem, ModelSpec, build_model,
                     dnls_exact_spectrum, toy_exact_nonlinear_pair,
                     toy_exact_spectrum, twodelta_eigenvalue_roots)
from .nonlinearity import NonlinearitySpec, eval_f, homogeneity_check, lipschitz_estimate
from .symmetry import (SymmetryOp, apply_symmetry, nonlinearity_equivariance_residual,
                       operator_commutation_residual, solution_symmetry_residual)

__version__ = "0.1.0"
