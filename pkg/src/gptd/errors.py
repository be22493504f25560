"""Exception hierarchy shared by every module."""


class GptdError(Exception):
    """Base class for all errors raised by gptd."""


class DimensionError(GptdError, ValueError):
    """Vector or matrix shapes do not agree."""


class InvalidProblemError(GptdError, ValueError):
    """A model, problem or measurement failed validation."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class SolverError(GptdError, RuntimeError):
    """The LP engine could not produce a verified answer."""


class IterationLimitError(SolverError):
    pass


class DualityGapError(SolverError):
    def __init__(self, primal_value, dual_value, tol):
        self.primal_value = primal_value
        self.dual_value = dual_value
        self.gap = abs(primal_value - dual_value)
        super().__init__(
            f"duality gap {self.gap:.3e} exceeds {tol:.1e} "
            f"(primal {primal_value!r}, dual {dual_value!r})"
        )


class CapExceededError(GptdError):
    def __init__(self, count, cap):
        self.count = count
        self.cap = cap
        super().__init__(f"{count} candidate bases exceed the cap of {cap}")


class CertificateError(GptdError, ValueError):
    """A dual certificate does not decompose into valid complementary states."""


class DegenerateScenarioError(GptdError, ValueError):
    """Some complementary weight vanishes, so no steering scenario exists."""
