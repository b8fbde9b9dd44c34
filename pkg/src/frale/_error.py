from __future__ import annotations

from typing import Any


class FraleError(Exception):
    """Base class of every error raised by this package."""


class DomainError(FraleError, ValueError):
    """Raised when an argument lies outside the domain of an operation."""

    def __init__(self, name: str, value: Any, requirement: str) -> None:  # noqa: ANN401
        super().__init__()
        self._name = name
        self._value = value
        self._requirement = requirement

    def __reduce__(self) -> str | tuple[Any, ...]:
        return self.__class__, (self._name, self._value, self._requirement)

    def __str__(self) -> str:
        return f"{self._name}={self._value!r} is invalid, {self._requirement}"

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}({self._name!r}, {self._value!r}, {self._requirement!r})"

    @property
    def name(self) -> str:
        """:return: the name of the offending argument"""
        return self._name

    @property
    def value(self) -> Any:  # noqa: ANN401
        """:return: the rejected value"""
        return self._value

    @property
    def requirement(self) -> str:
        """:return: what the argument must satisfy"""
        return self._requirement


class UnsupportedIntegrandError(DomainError):
    """Raised when the K^H operator is applied to an integrand it cannot handle for the given Hurst parameter."""


class DegenerateMeasureError(FraleError, ValueError):
    """Raised when a Lévy measure has no mass left or cannot be centered."""

    def __init__(self, reason: str) -> None:
        super().__init__()
        self._reason = reason

    def __reduce__(self) -> str | tuple[Any, ...]:
        return self.__class__, (self._reason,)

    def __str__(self) -> str:
        return f"degenerate Lévy measure: {self._reason}"

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}({self._reason!r})"

    @property
    def reason(self) -> str:
        """:return: why the measure was rejected"""
        return self._reason


class AccuracyError(FraleError, ArithmeticError):
    """Raised when a series or a quadrature cannot reach the requested accuracy."""

    def __init__(self, what: str, partial: float, estimate: float) -> None:
        super().__init__()
        self._what = what
        self._partial = partial
        self._estimate = estimate

    def __reduce__(self) -> str | tuple[Any, ...]:
        return self.__class__, (self._what, self._partial, self._estimate)

    def __str__(self) -> str:
        return f"{self._what} did not converge: partial value {self._partial!r}, error estimate {self._estimate!r}"

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}({self._what!r}, {self._partial!r}, {self._estimate!r})"

    @property
    def what(self) -> str:
        """:return: the computation that failed"""
        return self._what

    @property
    def partial(self) -> float:
        """:return: the best value reached before giving up"""
        return self._partial

    @property
    def estimate(self) -> float:
        """:return: the (absolute) error estimate of the partial value"""
        return self._estimate


class BudgetExceeded(FraleError, TimeoutError):  # noqa: N818
    """Raised when a verification suite could not finish within its time budget."""

    def __init__(self, suite: str, elapsed: float, budget: float) -> None:
        super().__init__()
        self._suite = suite
        self._elapsed = elapsed
        self._budget = budget

    def __reduce__(self) -> str | tuple[Any, ...]:
        return self.__class__, (self._suite, self._elapsed, self._budget)

    def __str__(self) -> str:
        return f"suite '{self._suite}' used {self._elapsed:.1f}s of a {self._budget:.1f}s budget"

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}({self._suite!r}, {self._elapsed!r}, {self._budget!r})"

    @property
    def suite(self) -> str:
        """:return: the name of the interrupted suite"""
        return self._suite

    @property
    def elapsed(self) -> float:
        """:return: seconds spent before the interruption"""
        return self._elapsed

    @property
    def budget(self) -> float:
        """:return: the allowed number of seconds"""
        return self._budget


__all__ = [
    "AccuracyError",
    "BudgetExceeded",
    "DegenerateMeasureError",
    "DomainError",
    "FraleError",
    "UnsupportedIntegrandError",
]
