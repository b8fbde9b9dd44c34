from __future__ import annotations

import pickle  # noqa: S403

import pytest

from frale import (
    AccuracyError,
    BudgetExceeded,
    DegenerateMeasureError,
    DomainError,
    FraleError,
    UnsupportedIntegrandError,
)


def test_domain_str() -> None:
    error = DomainError("H", 1.5, "must lie in (0, 1)")
    assert str(error) == "H=1.5 is invalid, must lie in (0, 1)"


def test_domain_repr() -> None:
    error = DomainError("H", 1.5, "must lie in (0, 1)")
    assert repr(error) == "DomainError('H', 1.5, 'must lie in (0, 1)')"


def test_domain_attributes() -> None:
    error = DomainError("t", -1.0, "must be positive")
    assert error.name == "t"
    assert error.value == -1.0
    assert error.requirement == "must be positive"


def test_domain_is_value_error() -> None:
    assert isinstance(DomainError("x", 0, "nonzero"), ValueError)
    assert isinstance(UnsupportedIntegrandError("g", "f", "steps only"), DomainError)


def test_degenerate_str() -> None:
    error = DegenerateMeasureError("no atoms")
    assert str(error) == "degenerate Lévy measure: no atoms"
    assert repr(error) == "DegenerateMeasureError('no atoms')"
    assert error.reason == "no atoms"


def test_accuracy_str() -> None:
    error = AccuracyError("quadrature", 1.25, 0.5)
    assert str(error) == "quadrature did not converge: partial value 1.25, error estimate 0.5"
    assert error.what == "quadrature"
    assert error.partial == 1.25
    assert error.estimate == 0.5
    assert isinstance(error, ArithmeticError)


def test_budget_str() -> None:
    error = BudgetExceeded("qv", 12.345, 10.0)
    assert str(error) == "suite 'qv' used 12.3s of a 10.0s budget"
    assert repr(error) == "BudgetExceeded('qv', 12.345, 10.0)"
    assert error.suite == "qv"
    assert error.elapsed == 12.345
    assert error.budget == 10.0
    assert isinstance(error, TimeoutError)


@pytest.mark.parametrize(
    "error",
    [
        DomainError("H", 1.5, "must lie in (0, 1)"),
        UnsupportedIntegrandError("g", "IntegrandFunction", "steps only"),
        DegenerateMeasureError("no atoms"),
        AccuracyError("series", 1.0, 0.1),
        BudgetExceeded("qv", 2.0, 1.0),
    ],
)
def test_pickle(error: FraleError) -> None:
    error_unpickled = pickle.loads(pickle.dumps(error))  # noqa: S301
    assert type(error_unpickled) is type(error)
    assert str(error_unpickled) == str(error)
    assert isinstance(error_unpickled, FraleError)
