from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Literal, Union

from scipy import integrate

from ._error import AccuracyError, DomainError

_LOGGER = logging.getLogger("frale")

#: Lanczos approximation with g = 7 and nine coefficients
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_GAMMA_MAX = 171.6  # float overflow beyond this point

#: a series stops once a term falls below this fraction of the partial sum
SERIES_RTOL = 1e-14
#: hard cap on the number of hypergeometric terms
SERIES_MAX_TERMS = 10_000
# Pfaff-transformed arguments above this use the 1 - y connection formula
_CONNECTION_THRESHOLD = 0.9
_INTEGER_GUARD = 1e-4


@dataclass(frozen=True)
class HurstParameter:
    """A validated Hurst parameter ``0 < h < 1``."""

    #: the Hurst index
    h: float

    def __post_init__(self) -> None:
        h = float(self.h)
        if not 0.0 < h < 1.0:
            raise DomainError("H", self.h, "the Hurst parameter must lie strictly between 0 and 1")
        object.__setattr__(self, "h", h)

    def __float__(self) -> float:
        return self.h

    @property
    def p(self) -> float:
        """:return: the kernel exponent ``H - 1/2``"""
        return self.h - 0.5

    @property
    def c_mg(self) -> float:
        """:return: the Molchan-Golosov normalizing constant :math:`c_H`"""
        return constant_cH(self)

    @property
    def c_mvn(self) -> float:
        """:return: the Mandelbrot-Van Ness normalizing constant :math:`C_H`"""
        return constant_CH(self)


HurstLike = Union[HurstParameter, float]


def as_hurst(hurst: HurstLike) -> HurstParameter:
    """:return: ``hurst`` as a validated :class:`HurstParameter`"""
    return hurst if isinstance(hurst, HurstParameter) else HurstParameter(hurst)


def _is_nonpositive_integer(x: float) -> bool:
    return x <= 0 and float(x).is_integer()


@dataclass(frozen=True)
class HypergeometricParams:
    """Parameters ``(a, b, c)`` of Gauss' hypergeometric function, ``c`` not a non-positive integer."""

    a: float
    b: float
    c: float

    def __post_init__(self) -> None:
        if _is_nonpositive_integer(self.c):
            raise DomainError("c", self.c, "must not be 0, -1, -2, ...")


def _lanczos(x: float) -> float:
    # valid for x >= 1/2
    x -= 1.0
    acc = _LANCZOS_COEF[0]
    for i, coef in enumerate(_LANCZOS_COEF[1:], start=1):
        acc += coef / (x + i)
    t = x + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * acc * math.exp((x + 0.5) * math.log(t) - t)


def _gamma_signed(x: float) -> float:
    """Gamma on the whole real line except the poles, using reflection below one half."""
    if x < 0.5:  # noqa: PLR2004
        if float(x).is_integer():
            raise DomainError("x", x, "the Gamma function has poles at 0, -1, -2, ...")
        return math.pi / (math.sin(math.pi * x) * _gamma_signed(1.0 - x))
    if float(x).is_integer() and x <= _GAMMA_MAX:
        return float(math.factorial(int(x) - 1))
    return _lanczos(x)


def _rgamma(x: float) -> float:
    """Reciprocal Gamma function, zero at the poles."""
    if _is_nonpositive_integer(x):
        return 0.0
    return 1.0 / _gamma_signed(x)


def gamma(x: float) -> float:
    """
    Euler's Gamma function for positive arguments.

    :param x: the argument, ``0 < x <= 171.6``
    :raises DomainError: for non-positive or overflowing arguments
    :return: :math:`\\Gamma(x)`

    """
    x = float(x)
    if not x > 0.0:
        raise DomainError("x", x, "the Gamma function is evaluated for positive arguments only")
    if x > _GAMMA_MAX:
        raise DomainError("x", x, f"Gamma overflows double precision beyond {_GAMMA_MAX}")
    return _gamma_signed(x)


def beta(x: float, y: float) -> float:
    """
    Euler's Beta function :math:`B(x, y) = \\Gamma(x)\\Gamma(y)/\\Gamma(x+y)`.

    :param x: first argument, positive
    :param y: second argument, positive
    :raises DomainError: for a non-positive argument

    """
    for name, value in (("x", x), ("y", y)):
        if not value > 0.0:
            raise DomainError(name, value, "the Beta function is evaluated for positive arguments only")
    return gamma(x) * gamma(y) / gamma(x + y)


def _series(a: float, b: float, c: float, x: float) -> float:
    total = term = 1.0
    for j in range(SERIES_MAX_TERMS):
        ratio = (a + j) * (b + j) / ((c + j) * (j + 1)) * x
        term *= ratio
        total += term
        # the terms must also be past their turning point, otherwise a small term is not a tail
        if abs(term) <= SERIES_RTOL * abs(total) and abs((a + j + 1) * (b + j + 1) * x) <= abs((c + j + 1) * (j + 2)):
            return total
    raise AccuracyError(f"hypergeometric series F({a}, {b}, {c}, {x})", total, abs(term))


def _near_integer(x: float) -> bool:
    return abs(x - round(x)) < _INTEGER_GUARD


def _unit_interval(a: float, b: float, c: float, y: float, w: float) -> float:
    """F(a, b, c, y) for 0 <= y < 1, with w = 1 - y supplied by the caller."""
    if a == 0.0 or b == 0.0:
        return 1.0
    gap = c - a - b
    if y <= _CONNECTION_THRESHOLD or _near_integer(gap):
        return _series(a, b, c, y)
    first = _gamma_signed(c) * _gamma_signed(gap) * _rgamma(c - a) * _rgamma(c - b)
    second = _gamma_signed(c) * _gamma_signed(-gap) * _rgamma(a) * _rgamma(b)
    result = first * _series(a, b, 1.0 - gap, w) if first else 0.0
    if second:
        result += second * w**gap * _series(c - a, c - b, 1.0 + gap, w)
    return result


def hyp2f1(
    params: HypergeometricParams,
    x: float,
    *,
    method: Literal["auto", "series", "pfaff"] = "auto",
) -> float:
    """
    Gauss' hypergeometric function :math:`F(a, b, c, x)` for non-positive arguments.

    The direct series :math:`\\sum (a)_j (b)_j / (c)_j \\, x^j / j!` uses the convention :math:`(a)_0 = 1`. The
    Pfaff transformation :math:`F(a,b,c,x) = (1-x)^{-a} F(a, c-b, c, x/(x-1))` maps ``x <= 0`` into ``[0, 1)``.

    :param params: the parameters ``(a, b, c)``
    :param x: the argument, ``x <= 0``
    :param method: ``series`` forces the direct series (needs ``x > -1``), ``pfaff`` forces the transformation,
        ``auto`` uses the series on ``(-1/2, 0]`` and the transformation elsewhere
    :raises DomainError: for ``x > 0`` or a series request outside its disc of convergence
    :raises AccuracyError: if the series does not settle within the term cap

    """
    x = float(x)
    if x > 0.0:
        raise DomainError("x", x, "only non-positive arguments are supported")
    a, b, c = params.a, params.b, params.c
    if method == "auto":
        method = "series" if x > -0.5 else "pfaff"  # noqa: PLR2004
    if method == "series":
        if x <= -1.0:
            raise DomainError("x", x, "the direct series converges only for x > -1")
        return 1.0 if a == 0.0 or b == 0.0 else _series(a, b, c, x)
    if method != "pfaff":
        raise DomainError("method", method, "must be one of auto, series, pfaff")
    # 1 - y = 1/(1 - x) exactly, not by cancellation
    w = 1.0 / (1.0 - x)
    return (1.0 - x) ** (-a) * _unit_interval(a, c - b, c, -x * w, w)


def constant_cH(hurst: HurstLike) -> float:  # noqa: N802
    """:return: the Molchan-Golosov constant :math:`c_H`"""
    h = as_hurst(hurst).h
    g = gamma(h + 0.5)
    return math.sqrt(2.0 * h * g * gamma(1.5 - h) / gamma(2.0 - 2.0 * h)) / g


def constant_CH(hurst: HurstLike) -> float:  # noqa: N802
    """:return: the Mandelbrot-Van Ness constant :math:`C_H` in closed form"""
    h = as_hurst(hurst).h
    return math.sqrt(2.0 * h * math.sin(math.pi * h) * gamma(2.0 * h)) / gamma(h + 0.5)


#: abscissae this many ulps from an interval end count as the end itself
_ENDPOINT_ULPS = 4.0


def with_endpoint_limits(
    func: Callable[[float], float],
    a: float,
    b: float,
    limits: tuple[float | None, float | None],
) -> Callable[[float], float]:
    """
    Complete the regular part of an algebraically weighted integrand at the interval ends.

    QUADPACK's ``weight="alg"`` rule samples the regular part at ``a`` and ``b`` themselves, where it is often only
    defined as a limit. A given limit is returned there instead of calling ``func``; ``None`` keeps ``func``.

    :param limits: the values of the regular part at ``a`` and at ``b``

    """
    at_a, at_b = limits
    guard = _ENDPOINT_ULPS * math.ulp(max(abs(a), abs(b)))

    def inner(x: float) -> float:
        if at_a is not None and x - a <= guard:
            return at_a
        if at_b is not None and b - x <= guard:
            return at_b
        return func(min(max(x, a), b))

    return inner


def constant_CH_integral(hurst: HurstLike, *, rtol: float = 1e-10) -> float:  # noqa: N802
    """
    The Mandelbrot-Van Ness constant from its integral definition.

    :math:`C_H = (\\int_0^\\infty ((1+s)^{H-1/2} - s^{H-1/2})^2 ds + 1/(2H))^{-1/2}`, integrated over
    :math:`z \\in (0, 1)` after :math:`s = z/(1-z)`.

    :param hurst: the Hurst parameter
    :param rtol: relative tolerance handed to the quadrature
    :raises AccuracyError: if the quadrature error estimate exceeds ``rtol``

    """
    hp = as_hurst(hurst)
    p = hp.p
    if p == 0.0:
        return 1.0
    alpha = 2.0 * p if p < 0 else 0.0
    beta_ = -2.0 * p

    def integrand(z: float) -> float:
        s = z / (1.0 - z)
        diff = s**p * math.expm1(p * math.log1p(1.0 / s))  # (1+s)^p - s^p without cancellation
        return diff * diff / (1.0 - z) ** 2 / (z**alpha * (1.0 - z) ** beta_)

    value, error = integrate.quad(
        with_endpoint_limits(integrand, 0.0, 1.0, (1.0, p * p)),
        0.0,
        1.0,
        weight="alg",
        wvar=(alpha, beta_),
        epsabs=0.0,
        epsrel=rtol,
    )
    if error > 1e3 * rtol * abs(value):
        raise AccuracyError("integral definition of C_H", value, error)
    _LOGGER.debug("C_H integral for H=%s is %s (error %s)", hp.h, value, error)
    return 1.0 / math.sqrt(value + 1.0 / (2.0 * hp.h))


__all__ = [
    "SERIES_MAX_TERMS",
    "SERIES_RTOL",
    "HurstLike",
    "HurstParameter",
    "HypergeometricParams",
    "as_hurst",
    "beta",
    "constant_CH",
    "constant_CH_integral",
    "constant_cH",
    "gamma",
    "hyp2f1",
    "with_endpoint_limits",
]
