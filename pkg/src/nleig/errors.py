"""Exception hierarchy for the nleig package.

Every failure mode of the numerical pipeline maps to a named exception so
that callers (and the CLI) can distinguish structural misuse from numerical
breakdown.
"""


class NleigError(Exception):
    """Base class for all package errors."""

    #: short machine-readable code used by the CLI error JSON
    code = "error"
    #: module the error originates from
    module = "nleig"


class GridMismatch(NleigError):
    """Operands live on different grids or have inconsistent dimensions."""

    code = "grid_mismatch"
    module = "core"


class SingularSystem(NleigError):
    """A direct or bordered solve hit an (numerically) singular matrix."""

    code = "singular_system"
    module = "core"

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class ConfigError(NleigError):
    """Invalid model or run configuration."""

    code = "config_error"
    module = "cli"


class UnknownModel(ConfigError):
    code = "unknown_model"
    module = "models"


class NonSymmetricGrid(ConfigError):
    """A non-symmetric grid was requested for a model that declares symmetries."""

    code = "non_symmetric_grid"
    module = "models"


class DegenerateParameter(NleigError):
    """Parameter value at which eigenvalue simplicity is lost."""

    code = "degenerate_parameter"
    module = "models"


class NoBoundState(NleigError):
    """The existence conditions for negative eigenvalues are violated."""

    code = "no_bound_state"
    module = "models"


class NonSimple(NleigError):
    """A second eigenvalue was found within tolerance of the target one."""

    code = "non_simple"
    module = "spectra"


class NoConvergence(NleigError):
    """Eigenvalue iteration did not converge within the iteration budget."""

    code = "no_convergence"
    module = "spectra"


class DefectivePair(NleigError):
    """Right/left eigenvectors are numerically orthogonal (near-Jordan block)."""

    code = "defective_pair"
    module = "spectra"


class NonRealEigenvalue(NleigError):
    """Symmetrization requested for an eigenvalue that is not real."""

    code = "non_real_eigenvalue"
    module = "spectra"


class NotHomogeneous(NleigError):
    """Operation requires a homogeneity degree the nonlinearity does not have."""

    code = "not_homogeneous"
    module = "nonlinearity"


class InconsistentRHS(NleigError):
    """Solvability check of a projected linear system failed."""

    code = "inconsistent_rhs"
    module = "ls_solver"


class NoContraction(NleigError):
    """Fixed-point iteration left the contraction regime (ratio guard tripped)."""

    code = "no_contraction"
    module = "ls_solver"

    def __init__(self, message, ratio=None, loop=None):
        super().__init__(message)
        self.ratio = ratio
        self.loop = loop


class MaxIterations(NleigError):
    """Fixed-point iteration hit the iteration cap without converging."""

    code = "max_iterations"
    module = "ls_solver"

    def __init__(self, message, loop=None):
        super().__init__(message)
        self.loop = loop


class ResidualCheckFailed(NleigError):
    """Assembled solution violates its residual bound."""

    code = "residual_check_failed"
    module = "ls_solver"


class NewtonDiverged(NleigError):
    """Newton corrector residual grew or iteration cap was reached."""

    code = "newton_diverged"
    module = "continuation"


class StepUnderflow(NleigError):
    """Continuation step size fell below the configured minimum."""

    code = "step_underflow"
    module = "continuation"

    def __init__(self, message, branch=None):
        super().__init__(message)
        self.branch = branch


class SwitchFailed(NleigError):
    """Branch switching failed for both perturbation signs."""

    code = "switch_failed"
    module = "continuation"
