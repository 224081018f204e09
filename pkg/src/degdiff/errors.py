"""Exception types shared across the package."""


class DegdiffError(Exception):
    """Base class for all package-specific errors."""


class DivergentIntegralError(DegdiffError):
    """A quadrature failed its convergence test (local non-integrability)."""


class SingularPointError(DegdiffError):
    """Evaluation requested at a singular point of a weight or coefficient."""


class SingularEvaluationPointError(DegdiffError):
    """An estimator was asked to evaluate at a point where the weight vanishes
    or blows up."""


class DegenerateTestFunctionError(DegdiffError):
    """Test function has zero gradient energy on the sampled region."""


class NonSymmetricMatrixError(DegdiffError):
    """A matrix expected to be symmetric is not, beyond tolerance."""


class NonPositiveRatioError(DegdiffError):
    """The quadratic form ratio <A xi, xi>/(rho ||xi||^2) was non-positive."""


class IndefiniteMatrixError(DegdiffError):
    """A matrix expected PSD has an eigenvalue below -tol."""


class CoincidentPointsError(DegdiffError):
    """Kernel evaluated on the diagonal x == y."""


class EmptyBatchError(DegdiffError):
    """An estimator received a batch with no usable samples."""


class SpecError(DegdiffError):
    """A JSON spec document failed validation.

    `pointer` holds a JSON-pointer-style path to the offending key.
    """

    def __init__(self, message: str, pointer: str = ""):
        super().__init__(message)
        self.pointer = pointer
