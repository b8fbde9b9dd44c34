from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Callable, Iterable, Literal, Mapping, Union

import numpy as np

from ._error import DomainError, UnsupportedIntegrandError
from ._kernels import KERNEL_RTOL, MOMENT_RTOL, checked_quad, mg_kernel_origin, mg_kernel_row
from ._specfun import HurstLike, HurstParameter, as_hurst, gamma

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

    from ._driver import DriverPath

_LOGGER = logging.getLogger("frale")


@dataclass(frozen=True)
class StepFunction:
    """:math:`g = \\sum_j a_j 1_{(s_{j-1}, s_j]}` on breakpoints ``0 = s_0 < s_1 < ... < s_n = T``."""

    breakpoints: tuple[float, ...]
    levels: tuple[float, ...]

    def __post_init__(self) -> None:
        points = tuple(float(s) for s in self.breakpoints)
        levels = tuple(float(a) for a in self.levels)
        if len(points) != len(levels) + 1 or not levels:
            raise DomainError("levels", levels, f"need one level per cell of {points}")
        if points[0] != 0.0 or any(b <= a for a, b in zip(points, points[1:])):
            raise DomainError("breakpoints", points, "must start at 0 and increase strictly")
        if not all(math.isfinite(a) for a in levels):
            raise DomainError("levels", levels, "must be finite")
        object.__setattr__(self, "breakpoints", points)
        object.__setattr__(self, "levels", levels)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Mapping[str, float]]) -> StepFunction:
        """:return: the step function of ``[{"upto": s_j, "level": a_j}, ...]``"""
        try:
            items = [(float(item["upto"]), float(item["level"])) for item in pairs]
        except (KeyError, TypeError, ValueError) as exception:
            raise DomainError("steps", pairs, 'expected [{"upto": ..., "level": ...}, ...]') from exception
        return cls((0.0, *(s for s, _ in items)), tuple(a for _, a in items))

    @classmethod
    def indicator(cls, a: float, b: float) -> StepFunction:
        """:return: :math:`1_{(a, b]}`"""
        if a == 0.0:
            return cls((0.0, b), (1.0,))
        return cls((0.0, a, b), (0.0, 1.0))

    @classmethod
    def staircase(cls, g: IntegrandFunction, level: int) -> StepFunction:
        """:return: ``g`` sampled at the midpoints of the ``2^level`` dyadic cells of ``[0, T]``"""
        if int(level) != level or level < 0:
            raise DomainError("level", level, "must be a non-negative integer")
        points = np.linspace(0.0, g.horizon, 2 ** int(level) + 1)
        middles = (points[:-1] + points[1:]) / 2.0
        return cls(tuple(points.tolist()), tuple(float(g.func(u)) for u in middles))

    @property
    def horizon(self) -> float:
        return self.breakpoints[-1]

    def __call__(self, u: ArrayLike) -> Any:  # noqa: ANN401
        u_arr = np.asarray(u, dtype=np.float64)
        index = np.searchsorted(self.breakpoints, u_arr, side="left") - 1
        inside = (u_arr > 0.0) & (u_arr <= self.horizon)
        value = np.where(inside, np.asarray(self.levels)[np.clip(index, 0, len(self.levels) - 1)], 0.0)
        return float(value) if value.ndim == 0 else value

    def _refined(self, points: tuple[float, ...]) -> tuple[float, ...]:
        middles = [(a + b) / 2.0 for a, b in zip(points, points[1:])]
        return tuple(float(self(m)) for m in middles)

    def __add__(self, other: StepFunction) -> StepFunction:
        if not isinstance(other, StepFunction):
            return NotImplemented
        points = tuple(sorted(set(self.breakpoints) | set(other.breakpoints)))
        return StepFunction(points, tuple(a + b for a, b in zip(self._refined(points), other._refined(points))))

    def __sub__(self, other: StepFunction) -> StepFunction:
        return self + (-1.0) * other

    def __mul__(self, factor: float) -> StepFunction:
        return StepFunction(self.breakpoints, tuple(factor * a for a in self.levels))

    __rmul__ = __mul__

    def to_pairs(self) -> list[dict[str, float]]:
        return [{"upto": s, "level": a} for s, a in zip(self.breakpoints[1:], self.levels)]


@dataclass(frozen=True)
class IntegrandFunction:
    """
    A deterministic integrand ``g`` on ``[0, T]`` with a declared bound :math:`|g| \\le` ``bound``.

    For ``H > 1/2`` the Molchan-Golosov kernel is positive, so
    :math:`|K^H g| \\le` ``bound`` :math:`\\cdot z_H(T, \\cdot)` and the bound certifies membership of :math:`L^2_H`.
    """

    func: Callable[[float], float]
    horizon: float
    bound: float
    smoothness: Literal["bounded", "continuous", "smooth"] = "smooth"

    def __post_init__(self) -> None:
        if not self.horizon > 0.0:
            raise DomainError("T", self.horizon, "must be positive")
        if not 0.0 <= self.bound < math.inf:
            raise DomainError("bound", self.bound, "must be a finite non-negative bound of |g|")

    def certificate(self, hurst: HurstLike) -> float:
        """:return: an upper bound of :math:`\\|g\\|_{L^2_H}`, namely ``bound`` :math:`\\cdot T^H`"""
        hp = _general_hurst(hurst)
        return self.bound * self.horizon**hp.h


Integrand = Union[StepFunction, IntegrandFunction]


def _general_hurst(hurst: HurstLike) -> HurstParameter:
    hp = as_hurst(hurst)
    if hp.p <= 0.0:
        raise UnsupportedIntegrandError(
            "g", "IntegrandFunction", f"H={hp.h} <= 1/2 admits step functions only, see StepFunction.staircase"
        )
    return hp


def _step_KH(hp: HurstParameter, g: StepFunction, s: float) -> float:  # noqa: N802
    row = mg_kernel_row(hp, s, g.breakpoints)
    return float(np.dot(g.levels, np.diff(row)))


def _function_KH(hp: HurstParameter, g: IntegrandFunction, s: float) -> float:  # noqa: N802
    p = hp.p
    integral, _ = checked_quad(
        lambda u: u**p * g.func(u),
        s,
        g.horizon,
        f"fractional integral of g at s={s}",
        rtol=KERNEL_RTOL,
        atol=1e-12,
        weight="alg",
        wvar=(p - 1.0, 0.0),
    )
    return gamma(hp.h + 0.5) * hp.c_mg * s ** (-p) * integral / gamma(p)


def _function_KH_origin(hp: HurstParameter, g: IntegrandFunction) -> float:  # noqa: N802
    """The limit of :math:`s^{H-1/2} (K^H g)(s)` as ``s`` tends to zero."""
    p = hp.p
    integral, _ = checked_quad(
        g.func,
        0.0,
        g.horizon,
        "fractional integral of g at the origin",
        rtol=KERNEL_RTOL,
        atol=1e-12,
        weight="alg",
        wvar=(2.0 * p - 1.0, 0.0),
    )
    return gamma(hp.h + 0.5) * hp.c_mg * integral / gamma(p)


def _step_KH_origin(hp: HurstParameter, g: StepFunction) -> float:  # noqa: N802
    """The limit of :math:`s^{|H-1/2|} (K^H g)(s)` as ``s`` tends to zero."""
    lead = [0.0, *(mg_kernel_origin(hp, t) for t in g.breakpoints[1:])]
    return math.fsum(a * (right - left) for a, left, right in zip(g.levels, lead, lead[1:]))


def apply_KH(hurst: HurstLike, g: Integrand, s: float) -> float:  # noqa: N802
    """
    The operator :math:`K^H` applied to ``g`` at ``s``.

    For a step function :math:`(K^H g)(s) = \\sum_j a_j (z_H(s_j, s) - z_H(s_{j-1}, s))`, for any ``H``. For a general
    integrand and ``H > 1/2``, :math:`(K^H g)(s) = \\Gamma(H+1/2) c_H s^{1/2-H} \\Gamma(H-1/2)^{-1}
    \\int_s^T (u-s)^{H-3/2} u^{H-1/2} g(u) du`, the right-sided Riemann-Liouville integral.

    :raises UnsupportedIntegrandError: for a general integrand with ``H <= 1/2``

    """
    s = float(s)
    if isinstance(g, StepFunction):
        hp = as_hurst(hurst)
        return _step_KH(hp, g, s) if 0.0 < s < g.horizon else 0.0
    hp = _general_hurst(hurst)
    return _function_KH(hp, g, s) if 0.0 < s < g.horizon else 0.0


def wiener_integral(hurst: HurstLike, g: Integrand, driver: DriverPath) -> float:
    """
    One realization of :math:`\\int_0^T g dY = \\int_0^T (K^H g)(s) dL_s = \\sum_i (K^H g)(s_i) \\Delta L_{s_i}`.

    :param driver: a driver covering ``(0, T]``

    """
    if driver.start > 0.0 or driver.horizon < g.horizon:
        raise DomainError("driver", (driver.start, driver.horizon), f"must cover (0, {g.horizon}]")
    times, sizes = driver.restrict(0.0, g.horizon)
    values = [apply_KH(hurst, g, s) * size for s, size in zip(times, sizes)]
    return math.fsum(values)


def l2h_norm(hurst: HurstLike, g: Integrand) -> float:
    """
    :math:`\\|g\\|_{L^2_H} = \\|K^H g\\|_{L^2([0, T])}`.

    Integrated piece by piece between breakpoints; the singularity of the kernel at the origin and, for ``H < 1/2``,
    at each breakpoint from the left go into algebraic quadrature weights.

    """
    if isinstance(g, IntegrandFunction):
        hp = _general_hurst(hurst)
        value, _ = checked_quad(
            lambda s: _function_KH(hp, g, s) ** 2 * s ** (2.0 * hp.p),
            0.0,
            g.horizon,
            "L2_H norm",
            rtol=MOMENT_RTOL,
            limits=(_function_KH_origin(hp, g) ** 2, 0.0),
            weight="alg",
            wvar=(-2.0 * hp.p, 0.0),
        )
        return math.sqrt(value)
    hp = as_hurst(hurst)
    p = hp.p
    if not any(g.levels):
        return 0.0
    if p == 0.0:
        return math.sqrt(math.fsum(a * a * (b - c) for a, c, b in zip(g.levels, g.breakpoints, g.breakpoints[1:])))
    pieces = []
    origin = _step_KH_origin(hp, g)
    c = hp.c_mg
    for m, (a, b) in enumerate(zip(g.breakpoints, g.breakpoints[1:])):
        alpha = -2.0 * abs(p) if m == 0 else 0.0
        beta_ = 2.0 * p if p < 0.0 else 0.0
        # K^H g behaves like origin * s^{-|p|} at zero and, for H < 1/2, like c_H (a_m - a_{m+1}) (b - s)^p below b
        at_a = origin**2 / (b - a) ** beta_ if m == 0 else None
        jump = g.levels[m] - (g.levels[m + 1] if m + 1 < len(g.levels) else 0.0)
        at_b = (c * jump) ** 2 / (b - a) ** alpha if p < 0.0 else None

        def integrand(s: float, a: float = a, b: float = b, alpha: float = alpha, beta_: float = beta_) -> float:
            return _step_KH(hp, g, s) ** 2 / ((s - a) ** alpha * (b - s) ** beta_)

        value, _ = checked_quad(
            integrand,
            a,
            b,
            f"L2_H norm on ({a}, {b})",
            rtol=MOMENT_RTOL,
            limits=(at_a, at_b),
            weight="alg",
            wvar=(alpha, beta_),
        )
        pieces.append(value)
    return math.sqrt(math.fsum(pieces))


def staircase_cauchy_increment(hurst: HurstLike, g: IntegrandFunction, level: int) -> float:
    """
    :math:`\\|g_{n+1} - g_n\\|_{L^2_H}` for the dyadic staircases of ``g`` at levels ``n`` and ``n + 1``.

    The approximation certificate of the step-function route; it shrinks as the staircases refine.
    """
    coarse = StepFunction.staircase(g, level)
    fine = StepFunction.staircase(g, level + 1)
    increment = l2h_norm(hurst, fine - coarse)
    _LOGGER.debug("Staircase Cauchy increment at level %s: %s", level, increment)
    return increment


def staircase_l2_distance(g: IntegrandFunction, steps: StepFunction) -> float:
    """:return: :math:`\\|g - \\text{steps}\\|_{L^2([0, T])}` by quadrature"""
    pieces = []
    for a, b, level in zip(steps.breakpoints, steps.breakpoints[1:], steps.levels):
        value, _ = checked_quad(
            lambda u, level=level: (g.func(u) - level) ** 2, a, b, "L2 distance", rtol=MOMENT_RTOL
        )
        pieces.append(value)
    return math.sqrt(math.fsum(pieces))


def kh_profile(hurst: HurstLike, g: Integrand, points: ArrayLike) -> NDArray[np.float64]:
    """:return: :math:`K^H g` at ``points``"""
    return np.array([apply_KH(hurst, g, s) for s in np.asarray(points, dtype=np.float64).reshape(-1)])


def kh_distance(hurst: HurstLike, first: Integrand, second: Integrand, *, samples: int = 256) -> float:
    """
    :math:`\\|K^H g_1 - K^H g_2\\|_{L^2([0, T])}` by the midpoint rule on ``samples`` cells.

    Works across representations, e.g. a function against its staircase.
    """
    if first.horizon != second.horizon:
        raise DomainError("second", second.horizon, f"must live on the same interval [0, {first.horizon}]")
    step = first.horizon / samples
    middles = (np.arange(samples) + 0.5) * step
    gap = kh_profile(hurst, first, middles) - kh_profile(hurst, second, middles)
    return math.sqrt(step * math.fsum(gap**2))


__all__ = [
    "Integrand",
    "IntegrandFunction",
    "StepFunction",
    "apply_KH",
    "kh_distance",
    "kh_profile",
    "l2h_norm",
    "staircase_cauchy_increment",
    "staircase_l2_distance",
    "wiener_integral",
]
