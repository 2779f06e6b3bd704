"""Exception hierarchy.

Every error carries a short machine-readable ``code``. The CLI maps
:class:`ValidationError` subclasses to exit status 2 and
:class:`NumericalError` subclasses to exit status 3.
"""

from __future__ import annotations


class LeakwiseError(Exception):
    code = "leakwise_error"


class ValidationError(LeakwiseError, ValueError):
    """Inputs violate a precondition."""

    code = "validation"


class NumericalError(LeakwiseError, ArithmeticError):
    """A numerical routine failed on otherwise valid inputs."""

    code = "numerical"


class NonpositiveInput(ValidationError):
    code = "nonpositive_input"


class BudgetNonpositive(NonpositiveInput):
    code = "budget_nonpositive"


class AllWeightsZero(ValidationError):
    code = "all_weights_zero"


class OutputBudgetTooSmall(ValidationError):
    code = "output_budget_too_small"


class DistortionExceedsVariance(ValidationError):
    code = "distortion_exceeds_variance"


class DegenerateFading(ValidationError):
    code = "degenerate_fading"


class ZeroNoiseFrequency(ValidationError):
    code = "zero_noise_frequency"


class MomentMismatch(ValidationError):
    code = "moment_mismatch"


class CapUnreachable(ValidationError):
    code = "cap_unreachable"


class LagTooLarge(ValidationError):
    code = "lag_too_large"


class NotPsd(ValidationError):
    code = "not_psd"


class SingularNoise(ValidationError):
    code = "singular_noise"


class TooManyComponents(ValidationError):
    code = "too_many_components"


class UnstableModel(ValidationError):
    code = "unstable_model"


class BracketFailure(NumericalError):
    code = "bracket_failure"


class NotMonotone(NumericalError):
    code = "not_monotone"


class ConvergenceFailure(NumericalError):
    code = "convergence_failure"


class InconsistentResult(NumericalError):
    code = "inconsistent_result"
