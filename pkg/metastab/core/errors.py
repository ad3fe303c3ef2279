from __future__ import annotations


class MetastabError(Exception):
    """Base class for every error raised by the toolkit."""


class ParameterError(MetastabError, ValueError):
    pass


class BudgetExceededError(MetastabError):
    def __init__(self, required: int, cap: int):
        super().__init__(f"enumeration needs {required} subsets, cap is {cap}; use sampled_min_cut")
        self.required = required
        self.cap = cap


class NoUncensoredSamplesError(MetastabError):
    def __init__(self, reps: int, t_max: float | None, estimate: object | None = None):
        super().__init__(f"all {reps} replications were censored at t_max={t_max}")
        self.reps = reps
        self.t_max = t_max
        # the summary with only the restricted mean filled in
        self.estimate = estimate


class BookkeepingError(MetastabError, AssertionError):
    pass


class InapplicableError(MetastabError):
    """The method cannot be used for these inputs (an answer, not a crash)."""
