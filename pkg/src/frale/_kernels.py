from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import TYPE_CHECKING, Any, Callable, Literal, NamedTuple, Union

import numpy as np
from scipy import integrate

from ._error import AccuracyError, DomainError
from ._specfun import (
    HurstLike,
    HurstParameter,
    HypergeometricParams,
    as_hurst,
    beta,
    constant_CH,
    constant_cH,
    gamma,
    hyp2f1,
    with_endpoint_limits,
)

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

_LOGGER = logging.getLogger("frale")

#: relative tolerance asked from every adaptive quadrature
QUAD_RTOL = 1e-11
#: largest accepted relative error estimate of a single kernel value
KERNEL_RTOL = 1e-8
#: largest accepted relative error estimate of a kernel moment
MOMENT_RTOL = 1e-5
#: the Mandelbrot-Van Ness tail bound is kept below this fraction of the moment
MVN_TAIL_RATIO = 1e-8
_QUAD_LIMIT = 200
# k (H - 1/2) this close to -1 or 1 lies on the divergence boundary
_BOUNDARY_GUARD = 1e-12


class KernelKind(str, Enum):
    """The two integral transformations of a Lévy process."""

    MOLCHAN_GOLOSOV = "mg"
    MANDELBROT_VAN_NESS = "mvn"


KindLike = Union[KernelKind, str]


def as_kind(kind: KindLike) -> KernelKind:
    """:return: ``kind`` as a :class:`KernelKind` (accepts ``"mg"`` and ``"mvn"``)"""
    try:
        return KernelKind(kind)
    except ValueError:
        raise DomainError("kind", kind, "must be one of mg, mvn") from None


@dataclass(frozen=True)
class KernelMomentResult:
    """The integral of the ``k``-th power of a kernel over its support, or a certified divergence."""

    kind: KernelKind
    k: int
    hurst: HurstParameter
    t: float
    #: the integral, ``None`` when divergent
    value: float | None
    #: set when the analytic divergence rule fires
    divergent: bool = False
    #: absolute quadrature error estimate
    error: float = 0.0
    #: analytic bound of the Mandelbrot-Van Ness tail beyond the truncation horizon (already added to the value)
    tail_bound: float = 0.0
    #: truncation horizon of the Mandelbrot-Van Ness integral in units of ``t``
    truncation: float | None = None

    def __post_init__(self) -> None:
        if self.divergent == (self.value is not None):
            msg = "a kernel moment is either divergent or carries a value"
            raise ValueError(msg)

    def __str__(self) -> str:
        return "divergent" if self.divergent else repr(self.value)


class MomentBounds(NamedTuple):
    """Beta-function lower bound ``g1`` and the published upper bound ``g2`` of the normalized fourth moments."""

    g1: float
    g2: float

    @property
    def difference(self) -> float:
        """:return: ``g1 - g2``"""
        return self.g1 - self.g2


def checked_quad(  # noqa: PLR0913
    func: Callable[[float], float],
    a: float,
    b: float,
    what: str,
    *,
    rtol: float,
    atol: float = 1e-14,
    limits: tuple[float | None, float | None] | None = None,
    **kwargs: Any,  # noqa: ANN401
) -> tuple[float, float]:
    """
    Adaptive quadrature through :func:`scipy.integrate.quad` that refuses inaccurate answers.

    :param what: names the computation in the error message
    :param rtol: largest accepted relative error estimate
    :param atol: absolute error estimate accepted regardless of the value
    :param limits: values of ``func`` at ``a`` and ``b`` where it is only defined as a limit, see
        :func:`~frale._specfun.with_endpoint_limits`
    :param kwargs: passed on, e.g. ``weight="alg"`` with ``wvar`` for algebraic endpoint singularities
    :raises AccuracyError: if the error estimate is too large
    :return: the value and its absolute error estimate

    """
    if limits is not None:
        func = with_endpoint_limits(func, a, b, limits)
    value, error = integrate.quad(func, a, b, epsabs=0.0, epsrel=QUAD_RTOL, limit=_QUAD_LIMIT, **kwargs)
    if error > max(rtol * abs(value), atol):
        raise AccuracyError(what, value, error)
    return value, error


@lru_cache(maxsize=None)
def _c_mg(h: float) -> float:
    return constant_cH(h)


@lru_cache(maxsize=None)
def _c_mvn(h: float) -> float:
    return constant_CH(h)


def _check_horizon(t: float) -> float:
    t = float(t)
    if not t > 0.0:
        raise DomainError("t", t, "the horizon must be positive")
    return t


def _mg_inner(p: float, t: float, s: float) -> float:
    """:math:`\\int_s^t u^p (u-s)^{p-1} du` with the algebraic singularity at ``u = s`` put into the weight."""
    value, _ = checked_quad(
        lambda u: u**p,
        s,
        t,
        f"Molchan-Golosov kernel integral at (t={t}, s={s})",
        rtol=KERNEL_RTOL,
        weight="alg",
        wvar=(p - 1.0, 0.0),
    )
    return value


def mg_kernel(
    hurst: HurstLike,
    t: float,
    s: float,
    *,
    form: Literal["auto", "integral", "hypergeometric"] = "auto",
) -> float:
    """
    Molchan-Golosov kernel :math:`z_H(t, s)`.

    The hypergeometric form is :math:`c_H (t-s)^{H-1/2} F(1/2-H, H-1/2, H+1/2, (s-t)/s)`; for ``H > 1/2`` the
    simplified form :math:`(H-1/2) c_H s^{1/2-H} \\int_s^t u^{H-1/2} (u-s)^{H-3/2} du` is used by default.

    :param hurst: the Hurst parameter
    :param t: the time, non-negative
    :param s: the integration variable; the kernel vanishes outside ``0 < s < t``, so everywhere at ``t = 0``
    :param form: force one of the two representations (the integral form needs ``H > 1/2``)
    :raises AccuracyError: if the inner quadrature or series fails

    """
    hp = as_hurst(hurst)
    t = float(t)
    if not t >= 0.0:
        raise DomainError("t", t, "the time must be non-negative")
    s = float(s)
    if s <= 0.0 or s >= t:
        return 0.0
    p = hp.p
    if p == 0.0:
        return 1.0
    if form == "auto":
        form = "integral" if p > 0.0 else "hypergeometric"
    if form == "integral":
        if p <= 0.0:
            raise DomainError("H", hp.h, "the simplified kernel form needs H > 1/2")
        return p * _c_mg(hp.h) * s ** (-p) * _mg_inner(p, t, s)
    if form != "hypergeometric":
        raise DomainError("form", form, "must be one of auto, integral, hypergeometric")
    params = HypergeometricParams(-p, p, hp.h + 0.5)
    return _c_mg(hp.h) * (t - s) ** p * hyp2f1(params, (s - t) / s)


def mg_kernel_sderivative(hurst: HurstLike, t: float, s: float) -> float:
    """
    Derivative :math:`\\partial z_H(t, s) / \\partial s` for ``H > 1/2`` and ``0 < s < t``.

    Differentiating the simplified form gives
    :math:`p c_H s^{-p-1} (p \\int_s^t u^p (u-s)^{p-1} du - t^{p+1} (t-s)^{p-1})` with :math:`p = H - 1/2`, which
    diverges to minus infinity as ``s`` approaches ``t``.

    :raises DomainError: for ``H <= 1/2`` or ``s`` outside ``(0, t)``

    """
    hp = as_hurst(hurst)
    t = _check_horizon(t)
    s = float(s)
    p = hp.p
    if p <= 0.0:
        raise DomainError("H", hp.h, "the kernel derivative is available for H > 1/2")
    if not 0.0 < s < t:
        raise DomainError("s", s, f"must lie in (0, {t})")
    inner = _mg_inner(p, t, s)
    return p * _c_mg(hp.h) * s ** (-p - 1.0) * (p * inner - t ** (p + 1.0) * (t - s) ** (p - 1.0))



def mg_kernel_origin(hurst: HurstLike, t: float) -> float:
    """
    Leading coefficient ``A`` of :math:`z_H(t, s) \\sim A s^{-|H-1/2|}` as ``s`` tends to zero.

    For ``H > 1/2`` the inner integral tends to :math:`t^{2H-1}/(2H-1)`, so :math:`A = c_H t^{2H-1}/2`. For
    ``H < 1/2`` the hypergeometric factor grows like :math:`((t-s)/s)^{1/2-H}` and
    :math:`A = c_H \\Gamma(H+1/2) \\Gamma(1-2H) / \\Gamma(1/2-H)`, the same for every ``t``.

    """
    hp = as_hurst(hurst)
    t = _check_horizon(t)
    p = hp.p
    if p == 0.0:
        return 1.0
    if p > 0.0:
        return _c_mg(hp.h) * t ** (2.0 * p) / 2.0
    return _c_mg(hp.h) * gamma(1.0 + p) * gamma(-2.0 * p) / gamma(-p)


_LEGENDRE_NODES, _LEGENDRE_WEIGHTS = np.polynomial.legendre.leggauss(10)


def mg_kernel_row(hurst: HurstLike, s: float, times: ArrayLike) -> NDArray[np.float64]:
    """
    :math:`z_H(t, s)` for one ``s`` and many ``t``.

    For ``H > 1/2`` the inner integral is accumulated cell by cell along the sorted times: cells touching or close to
    the singularity at ``u = s`` go through adaptive quadrature, the others through a fixed Gauss-Legendre rule, all
    at once. Other Hurst parameters fall back to :func:`mg_kernel` per time.

    :return: an array shaped like ``times``
    """
    hp = as_hurst(hurst)
    t_arr = np.asarray(times, dtype=np.float64)
    out = np.zeros(t_arr.shape)
    s = float(s)
    p = hp.p
    if s <= 0.0:
        return out
    if p <= 0.0:
        flat = out.reshape(-1)
        for i, t in enumerate(t_arr.reshape(-1)):
            flat[i] = mg_kernel(hp, t, s) if t > s else 0.0
        return out
    flat_t = t_arr.reshape(-1)
    later = np.flatnonzero(flat_t > s)
    if later.size == 0:
        return out
    order = later[np.argsort(flat_t[later], kind="stable")]
    edges = np.concatenate(([s], flat_t[order]))
    lo, hi = edges[:-1], edges[1:]
    pieces = np.zeros(order.size)
    near = (hi > lo) & (lo - s < hi - lo)
    near[0] = False
    far = (hi > lo) & ~near
    far[0] = False
    pieces[0] = _mg_inner(p, edges[1], s)
    for j in np.flatnonzero(near):
        pieces[j], _ = checked_quad(
            lambda u: u**p * (u - s) ** (p - 1.0),
            lo[j],
            hi[j],
            f"Molchan-Golosov kernel integral at (t={hi[j]}, s={s})",
            rtol=KERNEL_RTOL,
        )
    if far.any():
        half = (hi[far] - lo[far]) / 2.0
        u = (lo[far] + half)[:, None] + half[:, None] * _LEGENDRE_NODES
        pieces[far] = half * ((u**p * (u - s) ** (p - 1.0)) @ _LEGENDRE_WEIGHTS)
    flat_out = out.reshape(-1)
    flat_out[order] = p * _c_mg(hp.h) * s ** (-p) * np.cumsum(pieces)
    return out


def _positive_power(x: NDArray[np.float64], p: float) -> NDArray[np.float64]:
    out = np.zeros_like(x)
    np.power(x, p, out=out, where=x > 0.0)
    return out


def mvn_kernel(hurst: HurstLike, t: ArrayLike, s: ArrayLike) -> Any:  # noqa: ANN401
    """
    Mandelbrot-Van Ness kernel :math:`f_H(t, s) = C_H ((t-s)_+^{H-1/2} - (-s)_+^{H-1/2})`.

    Evaluated in closed form, element-wise over broadcast arrays.

    :return: a float for scalar input, an array otherwise

    """
    hp = as_hurst(hurst)
    t_arr = np.asarray(t, dtype=np.float64)
    s_arr = np.asarray(s, dtype=np.float64)
    value = _c_mvn(hp.h) * (_positive_power(t_arr - s_arr, hp.p) - _positive_power(-s_arr, hp.p))
    return float(value) if value.ndim == 0 else value


def _diverges(kind: KernelKind, p: float, k: int) -> bool:
    # singularity (t-s)^{kp} shared by both kernels for H < 1/2, s^{-kp} at the origin for MG with H > 1/2
    if k * p <= -1.0 + _BOUNDARY_GUARD:
        return True
    return kind is KernelKind.MOLCHAN_GOLOSOV and k * p >= 1.0 - _BOUNDARY_GUARD


def moment_diverges(kind: KindLike, hurst: HurstLike, k: int) -> bool:
    """:return: whether :func:`kernel_moment` certifies ``K = k`` divergent, without any quadrature"""
    return _diverges(as_kind(kind), as_hurst(hurst).p, int(k))


@lru_cache(maxsize=None)
def _mg_unit_moment(h: float, k: int) -> tuple[float, float]:
    p = h - 0.5
    alpha = -k * p if p > 0.0 else k * p
    beta_ = k * p

    def integrand(v: float) -> float:
        return mg_kernel(h, 1.0, v) ** k / (v**alpha * (1.0 - v) ** beta_)

    _LOGGER.debug("Integrating Molchan-Golosov kernel power %s for H=%s", k, h)
    what = f"Molchan-Golosov moment K={k}, H={h}"
    # z_H(1, v) behaves like A v^{-|p|} at the origin and like c_H (1 - v)^p at one
    limits = (mg_kernel_origin(h, 1.0) ** k, _c_mg(h) ** k)
    return checked_quad(
        integrand, 0.0, 1.0, what, rtol=MOMENT_RTOL, limits=limits, weight="alg", wvar=(alpha, beta_)
    )


def _mvn_difference(p: float, v: float) -> float:
    """:math:`(1+v)^p - v^p` without cancellation for large ``v``."""
    return v**p * math.expm1(p * math.log1p(1.0 / v))


def _mvn_tail_bound(p: float, k: int, horizon: float) -> float:
    # mean value theorem: |(1+v)^p - v^p| <= |p| v^{p-1}
    decay = k * (1.0 - p) - 1.0
    return abs(p) ** k * horizon ** (-decay) / decay


def mvn_truncation_point(p: float, k: int, reference: float) -> float:
    """:return: the smallest ``S >= 1`` whose Mandelbrot-Van Ness tail bound is below ``MVN_TAIL_RATIO * reference``"""
    if p == 0.0:
        return 1.0
    decay = k * (1.0 - p) - 1.0
    return max(1.0, (abs(p) ** k / (decay * MVN_TAIL_RATIO * abs(reference))) ** (1.0 / decay))


@lru_cache(maxsize=None)
def _mvn_unit_moment(h: float, k: int) -> tuple[float, float, float, float]:
    """:math:`\\int_0^\\infty ((1+v)^p - v^p)^k dv` as (value, error, tail bound, truncation point)."""
    p = h - 0.5
    head = 1.0 / (k * p + 1.0)
    horizon = mvn_truncation_point(p, k, head)
    what = f"Mandelbrot-Van Ness moment K={k}, H={h}"
    if p < 0.0:
        near, near_err = checked_quad(
            lambda v: _mvn_difference(p, v) ** k / v ** (k * p),
            0.0,
            1.0,
            what,
            rtol=MOMENT_RTOL,
            limits=((-1.0) ** k, None),
            weight="alg",
            wvar=(k * p, 0.0),
        )
    else:
        near, near_err = checked_quad(lambda v: _mvn_difference(p, v) ** k, 0.0, 1.0, what, rtol=MOMENT_RTOL)
    # v = e^w keeps the possibly astronomically long range (1, S) well scaled
    far, far_err = checked_quad(
        lambda w: _mvn_difference(p, math.exp(w)) ** k * math.exp(w),
        0.0,
        math.log(horizon),
        what,
        rtol=MOMENT_RTOL,
    )
    tail = _mvn_tail_bound(p, k, horizon)
    sign = -1.0 if p < 0.0 and k % 2 else 1.0
    return near + far + sign * tail, near_err + far_err, tail, horizon


def kernel_moment(kind: KindLike, hurst: HurstLike, t: float, k: int) -> KernelMomentResult:
    """
    Integral of the ``k``-th power of a kernel, :math:`\\int z_H(t,s)^k ds` or :math:`\\int f_H(t,s)^k ds`.

    Divergence is certified analytically without quadrature: the Molchan-Golosov moment diverges when
    ``H >= 1/2 + 1/k`` (singularity at the origin), both moments diverge when ``k (H - 1/2) <= -1`` (singularity at
    ``s = t``). Finite values use self-similarity, ``moment(t) = t^(1 + k (H - 1/2)) moment(1)``.

    :param kind: which kernel
    :param hurst: the Hurst parameter
    :param t: the horizon, positive
    :param k: the power, at least two
    :raises AccuracyError: when the quadrature error estimate exceeds ``MOMENT_RTOL`` relative

    """
    kind = as_kind(kind)
    hp = as_hurst(hurst)
    t = _check_horizon(t)
    if int(k) != k or k < 2:  # noqa: PLR2004
        raise DomainError("K", k, "the moment order must be an integer of at least 2")
    k = int(k)
    p = hp.p
    if p == 0.0:
        return KernelMomentResult(kind, k, hp, t, t)
    if _diverges(kind, p, k):
        _LOGGER.debug("Kernel moment %s K=%s H=%s certified divergent", kind.value, k, hp.h)
        return KernelMomentResult(kind, k, hp, t, None, divergent=True)
    scale = t ** (1.0 + k * p)
    if kind is KernelKind.MOLCHAN_GOLOSOV:
        unit, error = _mg_unit_moment(hp.h, k)
        return KernelMomentResult(kind, k, hp, t, scale * unit, error=scale * error)
    unit, error, tail, horizon = _mvn_unit_moment(hp.h, k)
    constant = _c_mvn(hp.h) ** k
    value = constant * scale * (1.0 / (k * p + 1.0) + unit)
    return KernelMomentResult(
        kind,
        k,
        hp,
        t,
        value,
        error=constant * scale * error,
        tail_bound=constant * scale * tail,
        truncation=horizon,
    )


def mg_kernel_l2(hurst: HurstLike, t: float) -> float:
    """
    Squared :math:`L^2` norm of :math:`z_H(t, \\cdot)` over ``(0, t)``.

    :raises AccuracyError: if the value misses the isometry :math:`t^{2H}` by more than ``MOMENT_RTOL`` relative

    """
    hp = as_hurst(hurst)
    result = kernel_moment(KernelKind.MOLCHAN_GOLOSOV, hp, t, 2)
    value = float(result.value)  # type: ignore[arg-type]  # K = 2 never diverges
    expected = result.t ** (2.0 * hp.h)
    if abs(value - expected) > MOMENT_RTOL * expected:
        raise AccuracyError(f"Molchan-Golosov L2 norm at H={hp.h}, t={t}", value, abs(value - expected))
    return value


def _check_bounds_range(hp: HurstParameter) -> float:
    if not 0.5 < hp.h < 0.75:  # noqa: PLR2004
        raise DomainError("H", hp.h, "the fourth-moment bounds hold for 1/2 < H < 3/4")
    return hp.p


def g1_g2_bounds(hurst: HurstLike) -> MomentBounds:
    """
    Beta-function bounds of the normalized fourth kernel moments for ``1/2 < H < 3/4``.

    ``g1`` bounds :math:`C_H^{-4} \\int_0^1 z_H(1,s)^4 ds` from below, ``g2`` is the published upper estimate
    :math:`p^4/(5-4p) + 1/(4p+1)` of the Mandelbrot-Van Ness counterpart, :math:`p = H - 1/2`. See
    :func:`mvn_fourth_moment_bound` for a bound that also covers the part of the integral ``g2`` leaves out.

    """
    hp = as_hurst(hurst)
    p = _check_bounds_range(hp)
    h = hp.h
    q = 4.0 * h - 1.0
    g1 = (
        beta(3.0 - 4.0 * h, q) / 16.0
        + beta(2.0 - 2.0 * h, q) / 4.0
        + beta(2.0 * h, q) / 4.0
        + beta(q, q) / 16.0
        + 3.0 / 8.0 / q
    )
    g2 = p**4 / (5.0 - 4.0 * p) + 1.0 / (4.0 * p + 1.0)
    return MomentBounds(g1, g2)


def mvn_fourth_moment_bound(hurst: HurstLike) -> float:
    """
    Upper bound of :math:`C_H^{-4} \\int_{-\\infty}^1 f_H(1,s)^4 ds` for ``1/2 < H < 1``.

    Splits :math:`\\int_0^\\infty ((1+v)^p - v^p)^4 dv` at ``v = 1``: beyond, the mean value theorem gives
    :math:`p^4/(3-4p)`; below, :math:`(1+v)^p \\le 1 + pv` gives :math:`\\int_0^1 (1 + pv - v^p)^4 dv`.

    """
    hp = as_hurst(hurst)
    p = hp.p
    if p <= 0.0:
        raise DomainError("H", hp.h, "the bound is stated for H > 1/2")
    near, _ = checked_quad(lambda v: (1.0 + p * v - v**p) ** 4, 0.0, 1.0, "fourth-moment bound", rtol=MOMENT_RTOL)
    return 1.0 / (4.0 * p + 1.0) + p**4 / (3.0 - 4.0 * p) + near


def shifted_mg_kernel(
    hurst: HurstLike,
    t: float,
    v: float,
    shift: float,
    *,
    unit_hypergeometric: bool = False,
) -> float:
    """
    Kernel of the shifted process :math:`Z^s_t = Y^s_{t+s} - Y^s_s` against the driver increment at ``v``.

    Equals :math:`z_H(t+s, v+s) - z_H(s, v+s)`, that is
    :math:`c_H ((t-v)^{p} \\tilde F((v-t)/(v+s)) 1_{(-s,t)}(v) - (-v)^{p} \\tilde F(v/(v+s)) 1_{(-s,0)}(v))`.

    :param hurst: the Hurst parameter
    :param t: the time of the shifted process, ``t >= -shift``
    :param v: the driver time
    :param shift: the shift ``s``, positive
    :param unit_hypergeometric: replace :math:`\\tilde F` by one, which yields :math:`(c_H/C_H) f_H(t, v)` on
        ``v > -s``

    """
    hp = as_hurst(hurst)
    shift = float(shift)
    if not shift > 0.0:
        raise DomainError("shift", shift, "must be positive")
    if v <= -shift:
        return 0.0
    if unit_hypergeometric:
        return _c_mg(hp.h) / _c_mvn(hp.h) * mvn_kernel(hp, t, v)
    left = mg_kernel(hp, t + shift, v + shift) if t + shift > 0.0 else 0.0
    return left - mg_kernel(hp, shift, v + shift)


def shift_error_l2(hurst: HurstLike, t: float, shift: float) -> float:
    """
    :math:`E(Z^s_t - Z^\\infty_t)^2 / E L_1^2` by quadrature of the squared kernel difference.

    :math:`Z^\\infty_t = c_H \\int ((t-v)_+^p - (-v)_+^p) dL_v`; the difference kernel is integrated over
    :math:`(-\\infty, -s)` where only the limit contributes, and over :math:`(-s, t)`.

    """
    hp = as_hurst(hurst)
    t = _check_horizon(t)
    p = hp.p
    c = _c_mg(hp.h)
    what = f"shift error H={hp.h}, t={t}, s={shift}"
    far, _ = checked_quad(
        lambda w: (w**p * math.expm1(p * math.log1p(t / w))) ** 2, shift, np.inf, what, rtol=MOMENT_RTOL
    )

    def near_integrand(v: float) -> float:
        limit = c * ((t - v) ** p - ((-v) ** p if v < 0.0 else 0.0))
        return (shifted_mg_kernel(hp, t, v, shift) - limit) ** 2

    near, _ = checked_quad(near_integrand, -shift, t, what, rtol=MOMENT_RTOL, points=[0.0])
    return c * c * far + near


__all__ = [
    "KERNEL_RTOL",
    "MOMENT_RTOL",
    "MVN_TAIL_RATIO",
    "QUAD_RTOL",
    "KernelKind",
    "KernelMomentResult",
    "KindLike",
    "MomentBounds",
    "as_kind",
    "checked_quad",
    "g1_g2_bounds",
    "kernel_moment",
    "mg_kernel",
    "mg_kernel_l2",
    "mg_kernel_origin",
    "mg_kernel_row",
    "mg_kernel_sderivative",
    "moment_diverges",
    "mvn_fourth_moment_bound",
    "mvn_kernel",
    "mvn_truncation_point",
    "shift_error_l2",
    "shifted_mg_kernel",
]
