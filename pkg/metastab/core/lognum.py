from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.special import logsumexp


@dataclass(frozen=True, order=True)
class LogNumber:
    """Nonnegative real stored as its natural logarithm.

    Hitting times grow like e^{cN}, so every quantity that can overflow a
    double is carried through the toolkit as a LogNumber. ``log_value`` may be
    ``-inf`` (the number zero). Ordering follows the real ordering because log
    is increasing.
    """

    log_value: float

    def __post_init__(self):
        if math.isnan(self.log_value) or self.log_value == math.inf:
            raise ValueError(f"invalid log-magnitude: {self.log_value!r}")

    @classmethod
    def from_value(cls, value: float) -> "LogNumber":
        if value < 0:
            raise ValueError(f"LogNumber holds nonnegative values, got {value!r}")
        if value == 0:
            return cls(-math.inf)
        return cls(math.log(value))

    @classmethod
    def zero(cls) -> "LogNumber":
        return cls(-math.inf)

    @classmethod
    def one(cls) -> "LogNumber":
        return cls(0.0)

    @classmethod
    def sum(cls, items: Iterable["LogNumber"]) -> "LogNumber":
        logs = np.fromiter((x.log_value for x in items), dtype=float)
        if logs.size == 0:
            return cls.zero()
        return cls(float(logsumexp(logs)))

    @property
    def value(self) -> float:
        """The plain float; ``inf`` once it no longer fits a double."""
        if self.log_value > 709.0:
            return math.inf
        return math.exp(self.log_value)

    def __float__(self) -> float:
        return self.value

    def __add__(self, other: "LogNumber") -> "LogNumber":
        return LogNumber(float(np.logaddexp(self.log_value, other.log_value)))

    def __mul__(self, other: "LogNumber") -> "LogNumber":
        if self.log_value == -math.inf or other.log_value == -math.inf:
            return LogNumber.zero()
        return LogNumber(self.log_value + other.log_value)

    def __truediv__(self, other: "LogNumber") -> "LogNumber":
        if other.log_value == -math.inf:
            raise ZeroDivisionError("division by LogNumber zero")
        if self.log_value == -math.inf:
            return LogNumber.zero()
        return LogNumber(self.log_value - other.log_value)

    def __pow__(self, exponent: float) -> "LogNumber":
        if self.log_value == -math.inf:
            return LogNumber.zero() if exponent > 0 else LogNumber.one()
        return LogNumber(self.log_value * exponent)

    def __repr__(self) -> str:
        return f"LogNumber(log={self.log_value:.12g})"
