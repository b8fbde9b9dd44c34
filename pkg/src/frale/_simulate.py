from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Any, Callable, TypeVar

import numpy as np

from ._config import worker_count
from ._driver import (
    DriverPath,
    LevyMeasureSpec,
    derive_seed,
    sample_brownian_increments,
    sample_compound_poisson,
    sample_two_sided,
)
from ._error import DomainError
from ._kernels import (
    KERNEL_RTOL,
    MOMENT_RTOL,
    KernelKind,
    KindLike,
    as_kind,
    checked_quad,
    mg_kernel,
    mg_kernel_origin,
    mg_kernel_row,
    mg_kernel_sderivative,
    mvn_kernel,
)
from ._specfun import HurstLike, as_hurst, constant_cH

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

_LOGGER = logging.getLogger("frale")
_T = TypeVar("_T")

#: share of :math:`E L_1^2 T^{2H}` the truncated Mandelbrot-Van Ness integral may lose by default
TRUNCATION_TOLERANCE = 1e-3
#: the default truncation horizon never exceeds this multiple of the time horizon
TRUNCATION_CAP = 1e5
_ROW_CHUNK = 1024


class SchemeTag(str, Enum):
    """How a path was computed."""

    JUMP_SUM = "JumpSum"
    PATHWISE_IBP = "PathwiseIBP"
    RIEMANN_L2 = "RiemannL2"
    TRUNCATED_MVN = "TruncatedMvN"
    SHIFTED_MG = "ShiftedMG"


class ProcessKind(str, Enum):
    """Which process a path realizes."""

    FLPMG = "flpmg"
    FLPMVN = "flpmvn"
    FBM = "fbm"
    SHIFTED = "shifted"
    MIXED = "mixed"


@dataclass(frozen=True)
class PathMeta:
    """Provenance of a sample path."""

    kind: ProcessKind
    hurst: float
    scheme: SchemeTag
    seed: int
    #: digest of the driving Lévy measure, ``None`` for Brownian drivers
    spec_digest: str | None = None
    #: how far into the past a Mandelbrot-Van Ness driver was sampled
    truncation: float | None = None
    #: set when the default truncation horizon hit its cap
    truncation_capped: bool = False
    shift: float | None = None
    sigma: float | None = None
    epsilon: float | None = None


@dataclass(frozen=True, eq=False)
class SamplePath:
    """One trajectory on a grid ``0 = t_0 < ... < t_N``, pinned at zero."""

    grid: NDArray[np.float64]
    values: NDArray[np.float64]
    meta: PathMeta

    def __post_init__(self) -> None:
        grid = _check_grid(self.grid)
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != grid.shape:
            raise DomainError("values", values.shape, f"must match the grid {grid.shape}")
        if not np.all(np.isfinite(values)):
            raise DomainError("values", values, "must be finite")
        if values[0] != 0.0:
            raise DomainError("values", values[0], "a path starts at zero")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @property
    def horizon(self) -> float:
        return float(self.grid[-1])

    def increments(self) -> NDArray[np.float64]:
        return np.diff(self.values)

    def exp(self) -> NDArray[np.float64]:
        """:return: the price path :math:`\\exp(U)` of the exponential market model"""
        return np.exp(self.values)


def _check_grid(grid: ArrayLike) -> NDArray[np.float64]:
    array = np.asarray(grid, dtype=np.float64)
    if array.ndim != 1 or array.size < 2 or not np.all(np.isfinite(array)):  # noqa: PLR2004
        raise DomainError("grid", grid, "must be a finite one-dimensional array of at least two times")
    if array[0] != 0.0 or np.any(np.diff(array) <= 0.0):
        raise DomainError("grid", grid, "must start at 0 and increase strictly")
    return array


def make_grid(horizon: float, steps: int) -> NDArray[np.float64]:
    """:return: ``steps + 1`` equidistant times from 0 to ``horizon``"""
    if not horizon > 0.0:
        raise DomainError("T", horizon, "must be positive")
    if int(steps) != steps or steps < 1:
        raise DomainError("steps", steps, "must be a positive integer")
    return np.linspace(0.0, float(horizon), int(steps) + 1)


def dyadic_grid(horizon: float, level: int) -> NDArray[np.float64]:
    """:return: the dyadic points :math:`k t 2^{-n}` of ``[0, horizon]``"""
    if int(level) != level or level < 0:
        raise DomainError("level", level, "must be a non-negative integer")
    return make_grid(horizon, 2 ** int(level))


def _check_driver(driver: DriverPath, spec: LevyMeasureSpec, start: float, horizon: float) -> None:
    if driver.spec != spec:
        raise DomainError("driver", driver.spec.digest(), f"was sampled from another measure than {spec.digest()}")
    if driver.start > start or driver.horizon < horizon:
        raise DomainError("driver", (driver.start, driver.horizon), f"must cover ({start}, {horizon}]")


def simulate_flpmg_jumpsum(
    hurst: HurstLike,
    spec: LevyMeasureSpec,
    grid: ArrayLike,
    seed: int,
    *,
    driver: DriverPath | None = None,
) -> SamplePath:
    """
    Molchan-Golosov fractional Lévy path as the exact sum over jumps.

    :math:`Y_t = \\sum_{s_i < t} z_H(t, s_i) \\Delta L_{s_i}`, kernels evaluated at the exact jump times.

    :param hurst: the Hurst parameter
    :param spec: the Lévy measure of the driver
    :param grid: evaluation times, starting at zero
    :param seed: the path seed
    :param driver: reuse an already sampled driver (it must cover the grid), ``seed`` is then only recorded

    """
    hp = as_hurst(hurst)
    grid = _check_grid(grid)
    if driver is None:
        driver = sample_compound_poisson(spec, grid[-1], seed)
    else:
        _check_driver(driver, spec, 0.0, grid[-1])
    times, sizes = driver.restrict(0.0, grid[-1])
    values = np.zeros(grid.size)
    for s, size in zip(times, sizes):
        values += size * mg_kernel_row(hp, s, grid)
    meta = PathMeta(ProcessKind.FLPMG, hp.h, SchemeTag.JUMP_SUM, int(seed), spec.digest())
    return SamplePath(grid, values, meta)


def _ibp_value(h: float, driver: DriverPath, t: float) -> float:
    """:math:`-\\int_0^t \\partial_s z_H(t, s) L_s ds` summed over the intervals where the driver is constant."""
    p = h - 0.5
    times, _ = driver.restrict(0.0, t)
    times = times[times < t]
    if times.size == 0:
        return 0.0
    edges = np.append(times, t)
    total = []
    for k, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
        level = float(driver.value_at(a))
        if level == 0.0 or b <= a:
            continue
        what = f"pathwise integral on ({a}, {b}) for t={t}"
        if k == times.size - 1:
            # (t - s)^{p - 1} at the right end goes into the weight, the rest tends to -p c_H there
            integral, _ = checked_quad(
                lambda s: mg_kernel_sderivative(h, t, s) * (t - s) ** (1.0 - p),
                a,
                b,
                what,
                rtol=MOMENT_RTOL,
                limits=(None, -p * constant_cH(h)),
                weight="alg",
                wvar=(0.0, p - 1.0),
            )
        else:
            integral, _ = checked_quad(lambda s: mg_kernel_sderivative(h, t, s), a, b, what, rtol=MOMENT_RTOL)
        total.append(-level * integral)
    return math.fsum(total)


def simulate_flpmg_ibp(
    hurst: HurstLike,
    spec: LevyMeasureSpec,
    grid: ArrayLike,
    seed: int,
    *,
    driver: DriverPath | None = None,
) -> SamplePath:
    """
    Molchan-Golosov path through the pathwise form :math:`Y_t = -\\int_0^t \\partial_s z_H(t, s) L_s ds`.

    Needs ``H > 1/2``; on the same driver it agrees with :func:`simulate_flpmg_jumpsum` up to quadrature error.

    """
    hp = as_hurst(hurst)
    if hp.p <= 0.0:
        raise DomainError("H", hp.h, "the pathwise construction needs H > 1/2")
    grid = _check_grid(grid)
    if driver is None:
        driver = sample_compound_poisson(spec, grid[-1], seed)
    else:
        _check_driver(driver, spec, 0.0, grid[-1])
    values = np.array([_ibp_value(hp.h, driver, t) if t > 0.0 else 0.0 for t in grid])
    meta = PathMeta(ProcessKind.FLPMG, hp.h, SchemeTag.PATHWISE_IBP, int(seed), spec.digest())
    return SamplePath(grid, values, meta)


def mvn_truncation_loss(hurst: HurstLike, t: float, truncation: float, *, exact: bool = False) -> float:
    """
    Share of :math:`E L_1^2` lost from :math:`E X_t^2` by dropping the driver before ``-truncation``.

    The bound is :math:`C_H^2 p^2 t^2 S^{2p-1}/(1-2p)` from :math:`|(t+w)^p - w^p| \\le |p| t w^{p-1}`; with ``exact``
    the integral :math:`C_H^2 \\int_S^\\infty ((t+w)^p - w^p)^2 dw` itself is returned.

    """
    hp = as_hurst(hurst)
    p = hp.p
    if p == 0.0:
        return 0.0
    c2 = hp.c_mvn**2
    if not exact:
        return c2 * p * p * t * t * truncation ** (2.0 * p - 1.0) / (1.0 - 2.0 * p)
    value, _ = checked_quad(
        lambda w: (w**p * math.expm1(p * math.log1p(t / w))) ** 2,
        truncation,
        np.inf,
        f"truncation loss H={hp.h}, t={t}, S={truncation}",
        rtol=MOMENT_RTOL,
    )
    return c2 * value


def mvn_truncation_horizon(
    hurst: HurstLike,
    horizon: float,
    *,
    tolerance: float = TRUNCATION_TOLERANCE,
    cap: float = TRUNCATION_CAP,
) -> tuple[float, bool]:
    """
    Default truncation horizon of the Mandelbrot-Van Ness integral.

    The smallest ``S`` whose loss bound (see :func:`mvn_truncation_loss`) stays below
    ``tolerance * horizon^(2H)``, limited to ``cap * horizon``.

    :return: the horizon and whether the cap was hit (a warning is logged then)

    """
    hp = as_hurst(hurst)
    p = hp.p
    if p == 0.0:
        return horizon, False
    target = tolerance * horizon ** (2.0 * hp.h)
    c2 = hp.c_mvn**2
    wanted = (c2 * p * p * horizon * horizon / ((1.0 - 2.0 * p) * target)) ** (1.0 / (1.0 - 2.0 * p))
    wanted = max(wanted, horizon)
    if wanted > cap * horizon:
        _LOGGER.warning(
            "Truncation horizon for H=%s capped at %s (needs %.3g), variance loss up to %.3g",
            hp.h,
            cap * horizon,
            wanted,
            mvn_truncation_loss(hp, horizon, cap * horizon) / horizon ** (2.0 * hp.h),
        )
        return cap * horizon, True
    return wanted, False


def _mvn_values(
    h: float,
    grid: NDArray[np.float64],
    times: NDArray[np.float64],
    sizes: NDArray[np.float64],
) -> Any:  # noqa: ANN401
    values = np.zeros(grid.size)
    for lo in range(0, times.size, _ROW_CHUNK):
        block = slice(lo, lo + _ROW_CHUNK)
        values += mvn_kernel(h, grid[:, None], times[None, block]) @ sizes[block]
    return values


def simulate_flpmvn(  # noqa: PLR0913
    hurst: HurstLike,
    spec: LevyMeasureSpec,
    grid: ArrayLike,
    seed: int,
    truncation: float | None = None,
    *,
    driver: DriverPath | None = None,
) -> SamplePath:
    """
    Mandelbrot-Van Ness fractional Lévy path, :math:`X_t \\approx \\sum_{s_i > -S} f_H(t, s_i) \\Delta L_{s_i}`.

    :param truncation: how far back the two-sided driver reaches, see :func:`mvn_truncation_horizon` for the default
    :param driver: reuse a two-sided driver covering ``(-truncation, T]``

    """
    hp = as_hurst(hurst)
    grid = _check_grid(grid)
    horizon = float(grid[-1])
    capped = False
    if truncation is None:
        truncation, capped = mvn_truncation_horizon(hp, horizon)
    elif not truncation > 0.0:
        raise DomainError("S_trunc", truncation, "must be positive")
    if driver is None:
        driver = sample_two_sided(spec, horizon, seed, past=truncation)
    else:
        _check_driver(driver, spec, -truncation, horizon)
    times, sizes = driver.restrict(-truncation, horizon)
    values = _mvn_values(hp.h, grid, times, sizes)
    meta = PathMeta(
        ProcessKind.FLPMVN,
        hp.h,
        SchemeTag.TRUNCATED_MVN,
        int(seed),
        spec.digest(),
        truncation=truncation,
        truncation_capped=capped,
    )
    return SamplePath(grid, values, meta)


def simulate_shifted_mg(  # noqa: PLR0913
    hurst: HurstLike,
    spec: LevyMeasureSpec,
    shift: float,
    grid: ArrayLike,
    seed: int,
    *,
    driver: DriverPath | None = None,
    unit_hypergeometric: bool = False,
) -> SamplePath:
    """
    The shifted process :math:`Z^s_t = Y^s_{t+s} - Y^s_s` on the two-sided driver.

    :math:`Z^s_t = \\sum_{-s < v_i < t} (z_H(t+s, v_i+s) - z_H(s, v_i+s)) \\Delta L_{v_i}`. Reusing one driver for
    several shifts couples the paths.

    :param shift: the shift ``s``, positive
    :param unit_hypergeometric: replace the hypergeometric factor by one, which leaves the Mandelbrot-Van Ness
        integrand scaled by :math:`c_H/C_H` on the jumps after ``-s``

    """
    hp = as_hurst(hurst)
    grid = _check_grid(grid)
    shift = float(shift)
    if not shift > 0.0:
        raise DomainError("shift", shift, "must be positive")
    horizon = float(grid[-1])
    if driver is None:
        driver = sample_two_sided(spec, horizon, seed, past=shift)
    else:
        _check_driver(driver, spec, -shift, horizon)
    times, sizes = driver.restrict(-shift, horizon)
    if unit_hypergeometric:
        values = hp.c_mg / hp.c_mvn * _mvn_values(hp.h, grid, times, sizes)
    else:
        shifted = np.concatenate(([shift], grid + shift))
        values = np.zeros(grid.size)
        for v, size in zip(times, sizes):
            row = mg_kernel_row(hp, v + shift, shifted)
            values += size * (row[1:] - row[0])
    meta = PathMeta(ProcessKind.SHIFTED, hp.h, SchemeTag.SHIFTED_MG, int(seed), spec.digest(), shift=shift)
    return SamplePath(grid, values, meta)


def fbm_weights(hurst: HurstLike, grid: ArrayLike) -> NDArray[np.float64]:
    """
    Cell-average weights :math:`w_{kj} = \\int_{t_j}^{t_{j+1}} z_H(t_k, s) ds / (t_{j+1} - t_j)`.

    Row ``k`` turns Brownian increments into :math:`B^H_{t_k} = \\sum_j w_{kj} \\Delta W_j`; the matrix depends on
    ``(H, grid)`` only and is shared by an ensemble.

    """
    hp = as_hurst(hurst)
    grid = _check_grid(grid)
    n = grid.size - 1
    weights = np.zeros((grid.size, n))
    if hp.p == 0.0:
        return np.tril(np.ones((grid.size, n)), -1)
    p = hp.p
    for k in range(1, grid.size):
        t = float(grid[k])
        for j in range(k):
            a, b = float(grid[j]), float(grid[j + 1])
            what = f"fBm weight on ({a}, {b}) for t={t}"
            # s^{-|p|} at the origin and (t - s)^p at t go into the weights of the end cells
            alpha = -abs(p) if j == 0 else 0.0
            beta_ = p if j == k - 1 else 0.0
            if alpha or beta_:
                # z_H(t, s) tends to A s^{-|p|} at the origin and to c_H (t - s)^p at t
                at_a = mg_kernel_origin(hp, t) / t**beta_ if j == 0 else None
                at_b = hp.c_mg / t**alpha if j == k - 1 else None
                value, _ = checked_quad(
                    lambda s, t=t, alpha=alpha, beta_=beta_: mg_kernel(hp, t, s) / (s**alpha * (t - s) ** beta_),
                    a,
                    b,
                    what,
                    rtol=KERNEL_RTOL,
                    limits=(at_a, at_b),
                    weight="alg",
                    wvar=(alpha, beta_),
                )
            else:
                value, _ = checked_quad(lambda s, t=t: mg_kernel(hp, t, s), a, b, what, rtol=KERNEL_RTOL)
            weights[k, j] = value / (b - a)
    return weights


def simulate_fbm_mg(
    hurst: HurstLike,
    grid: ArrayLike,
    seed: int,
    *,
    weights: NDArray[np.float64] | None = None,
) -> SamplePath:
    """
    Fractional Brownian motion :math:`B^H_t = \\int_0^t z_H(t,s) dW_s` discretized with :func:`fbm_weights`.

    :param weights: precomputed weights for this ``(H, grid)``

    """
    hp = as_hurst(hurst)
    grid = _check_grid(grid)
    if weights is None:
        weights = fbm_weights(hp, grid)
    elif weights.shape != (grid.size, grid.size - 1):
        raise DomainError("weights", weights.shape, f"must be {(grid.size, grid.size - 1)} for this grid")
    increments = sample_brownian_increments(grid, seed).increments
    values = weights @ increments
    return SamplePath(grid, values, PathMeta(ProcessKind.FBM, hp.h, SchemeTag.RIEMANN_L2, int(seed)))


def simulate_mixed(  # noqa: PLR0913
    hurst: HurstLike,
    spec: LevyMeasureSpec,
    sigma: float,
    epsilon: float,
    grid: ArrayLike,
    seed: int,
    kind: KindLike = KernelKind.MOLCHAN_GOLOSOV,
    *,
    truncation: float | None = None,
) -> SamplePath:
    """
    The mixed model :math:`U_t = \\sigma Z_t + \\epsilon W_t`.

    ``Z`` is a fractional Lévy path of the given kind, ``W`` an independent Brownian motion drawn from its own stream
    of the same seed. :meth:`SamplePath.exp` gives the price path of the market model.

    """
    hp = as_hurst(hurst)
    if hp.p <= 0.0:
        raise DomainError("H", hp.h, "the mixed model needs H > 1/2")
    for name, value in (("sigma", sigma), ("epsilon", epsilon)):
        if not value > 0.0:
            raise DomainError(name, value, "must be positive")
    grid = _check_grid(grid)
    if as_kind(kind) is KernelKind.MOLCHAN_GOLOSOV:
        fractional = simulate_flpmg_jumpsum(hp, spec, grid, seed)
    else:
        fractional = simulate_flpmvn(hp, spec, grid, seed, truncation)
    brownian = sample_brownian_increments(grid, seed).values()
    meta = PathMeta(
        ProcessKind.MIXED,
        hp.h,
        fractional.meta.scheme,
        int(seed),
        spec.digest(),
        truncation=fractional.meta.truncation,
        truncation_capped=fractional.meta.truncation_capped,
        sigma=float(sigma),
        epsilon=float(epsilon),
    )
    return SamplePath(grid, sigma * fractional.values + epsilon * brownian, meta)


def simulate_ensemble(
    simulate: Callable[[int], _T],
    size: int,
    seed: int,
    *,
    workers: int | None = None,
) -> list[_T]:
    """
    Run ``simulate(derive_seed(seed, i))`` for ``i < size`` on a thread pool.

    The result list is ordered by path index and does not depend on the number of workers.

    :param workers: pool size, defaults to :func:`frale.worker_count`

    """
    if int(size) != size or size < 1:
        raise DomainError("size", size, "the ensemble needs at least one path")
    seeds = [derive_seed(seed, i) for i in range(int(size))]
    count = min(worker_count(workers), len(seeds))
    _LOGGER.debug("Simulating %d paths from master seed %s on %d workers", len(seeds), seed, count)
    if count == 1:
        return [simulate(s) for s in seeds]
    with ThreadPoolExecutor(max_workers=count, thread_name_prefix="frale") as pool:
        return list(pool.map(simulate, seeds))


def ensemble_values(paths: list[SamplePath]) -> NDArray[np.float64]:
    """:return: the values of equal-grid paths stacked into a ``(paths, times)`` array"""
    if not paths:
        raise DomainError("paths", paths, "the ensemble is empty")
    grid = paths[0].grid
    if any(path.grid.shape != grid.shape or not np.array_equal(path.grid, grid) for path in paths):
        raise DomainError("paths", len(paths), "all paths must share one grid")
    return np.stack([path.values for path in paths])


__all__ = [
    "TRUNCATION_CAP",
    "TRUNCATION_TOLERANCE",
    "PathMeta",
    "ProcessKind",
    "SamplePath",
    "SchemeTag",
    "dyadic_grid",
    "ensemble_values",
    "fbm_weights",
    "make_grid",
    "mvn_truncation_horizon",
    "mvn_truncation_loss",
    "simulate_ensemble",
    "simulate_flpmg_ibp",
    "simulate_flpmg_jumpsum",
    "simulate_flpmvn",
    "simulate_fbm_mg",
    "simulate_mixed",
    "simulate_shifted_mg",
]
