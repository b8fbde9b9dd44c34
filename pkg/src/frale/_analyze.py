from __future__ import annotations

import cmath
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Any, NamedTuple, Sequence

import numpy as np

from ._driver import LevyMeasureSpec, psi, sample_compound_poisson, sample_two_sided
from ._error import DomainError
from ._kernels import (
    KernelKind,
    KindLike,
    as_kind,
    checked_quad,
    kernel_moment,
    mg_kernel,
    mvn_kernel,
    shift_error_l2,
)
from ._simulate import (
    SamplePath,
    ensemble_values,
    mvn_truncation_horizon,
    mvn_truncation_loss,
    simulate_ensemble,
    simulate_flpmg_jumpsum,
    simulate_flpmvn,
    simulate_shifted_mg,
)
from ._specfun import HurstLike, HurstParameter, as_hurst

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

_LOGGER = logging.getLogger("frale")

#: acceptance threshold in Monte Carlo standard errors
Z_THRESHOLD = 3.0
#: a simulated value this close to zero counts as zero
ZERO_BAND = 1e-12
_CHARFN_RTOL = 1e-8
# the imaginary part vanishes for symmetric measures
_CHARFN_ATOL = 1e-10


class Verdict(str, Enum):
    PASS = "pass"  # noqa: S105
    FAIL = "fail"
    DIVERGENT_ANALYTIC = "divergent-analytic"


class ReportRow(NamedTuple):
    """One analytic/empirical pair of a report, the CSV line ``quantity,analytic,empirical,stderr``."""

    quantity: str
    analytic: float | None
    empirical: float
    stderr: float

    @property
    def z_score(self) -> float | None:
        """:return: the distance between both sides in standard errors, ``None`` without analytic side"""
        if self.analytic is None:
            return None
        gap = abs(self.empirical - self.analytic)
        if self.stderr == 0.0:
            return 0.0 if gap <= 1e-12 * max(1.0, abs(self.analytic)) else math.inf  # noqa: PLR2004
        return gap / self.stderr


class Report(ABC):
    """Something that renders as CSV rows and decides a verdict."""

    @abstractmethod
    def rows(self) -> list[ReportRow]:
        raise NotImplementedError

    def verdict(self, threshold: float = Z_THRESHOLD) -> Verdict:
        """:return: pass when every row with an analytic side lies within ``threshold`` standard errors"""
        rows = self.rows()
        if any(row.analytic is None for row in rows):
            return Verdict.DIVERGENT_ANALYTIC
        return Verdict.PASS if all(row.z_score <= threshold for row in rows) else Verdict.FAIL  # type: ignore[operator]


def _mean_stderr(sample: NDArray[np.float64]) -> tuple[float, float]:
    n = sample.shape[0]
    mean = math.fsum(sample) / n
    stderr = float(np.std(sample, ddof=1)) / math.sqrt(n) if n > 1 else math.inf
    return mean, stderr


def _column_stats(sample: NDArray[np.float64]) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    means = np.array([math.fsum(column) for column in sample.T]) / sample.shape[0]
    return means, np.std(sample, axis=0, ddof=1) / math.sqrt(sample.shape[0])


def _indices(grid: NDArray[np.float64], times: ArrayLike) -> NDArray[np.intp]:
    wanted = np.asarray(times, dtype=np.float64)
    index = np.clip(np.searchsorted(grid, wanted), 0, grid.size - 1)
    lower = np.clip(index - 1, 0, grid.size - 1)
    index = np.where(np.abs(grid[lower] - wanted) < np.abs(grid[index] - wanted), lower, index)
    if not np.allclose(grid[index], wanted, rtol=0.0, atol=1e-12 * max(1.0, float(grid[-1]))):
        raise DomainError("times", wanted, "are not points of the sampling grid")
    return index


@dataclass(frozen=True)
class DyadicQVReport(Report):
    """Ensemble means of the dyadic quadratic variation :math:`V_n` over ``[start, start + t]``."""

    levels: tuple[int, ...]
    means: tuple[float, ...]
    stderrs: tuple[float, ...]
    expected: tuple[float, ...]
    t: float
    start: float = 0.0

    def rows(self) -> list[ReportRow]:
        return [
            ReportRow(f"V_{n}", e, m, s) for n, m, s, e in zip(self.levels, self.means, self.stderrs, self.expected)
        ]


def dyadic_qv(  # noqa: PLR0913
    paths: Sequence[SamplePath],
    t: float,
    levels: Sequence[int],
    *,
    hurst: HurstLike,
    m2: float,
    start: float = 0.0,
) -> DyadicQVReport:
    """
    Dyadic quadratic variation :math:`V_n = \\sum_k (Y_{a + (k+1) t 2^{-n}} - Y_{a + k t 2^{-n}})^2` per path.

    The expected value is :math:`E V_n = m_2 t^{2H} 2^{-n(2H-1)}`, which decays in ``n`` for ``H > 1/2``.

    :param paths: an ensemble sampled on a grid that contains the dyadic points of the finest level
    :param t: the length of the interval
    :param levels: strictly increasing levels
    :param hurst: the Hurst parameter of the paths
    :param m2: the second moment of the driver's Lévy measure
    :param start: the left end ``a`` of the interval
    :raises DomainError: if the grid cannot be refined to a requested level

    """
    hp = as_hurst(hurst)
    levels = tuple(int(n) for n in levels)
    if not levels or any(b <= a for a, b in zip(levels, levels[1:])) or levels[0] < 0:
        raise DomainError("levels", levels, "must be non-empty, non-negative and strictly increasing")
    values = ensemble_values(list(paths))
    grid = paths[0].grid
    means, stderrs, expected = [], [], []
    for n in levels:
        points = start + t * np.arange(2**n + 1) / 2**n
        try:
            index = _indices(grid, points)
        except DomainError:
            raise DomainError("levels", n, "the sampling grid does not contain this dyadic level") from None
        variation = np.sum(np.diff(values[:, index], axis=1) ** 2, axis=1)
        mean, stderr = _mean_stderr(variation)
        means.append(mean)
        stderrs.append(stderr)
        expected.append(m2 * t ** (2.0 * hp.h) * 2.0 ** (-n * (2.0 * hp.h - 1.0)))
    return DyadicQVReport(levels, tuple(means), tuple(stderrs), tuple(expected), float(t), float(start))


def k_statistics(sample: ArrayLike) -> tuple[float, float, float]:
    """
    Unbiased estimators ``(k2, k3, k4)`` of the second to fourth cumulants.

    Power sums are taken of the mean-centered sample with compensated summation.
    """
    x = np.asarray(sample, dtype=np.float64)
    n = x.size
    if n < 4:  # noqa: PLR2004
        raise DomainError("sample", n, "k-statistics need at least four values")
    centered = x - math.fsum(x) / n
    s1, s2, s3, s4 = (math.fsum(centered**r) for r in range(1, 5))
    return _k_from_sums(n, s1, s2, s3, s4)


def _k_from_sums(n: Any, s1: Any, s2: Any, s3: Any, s4: Any) -> Any:  # noqa: ANN401
    k2 = (n * s2 - s1**2) / (n * (n - 1))
    k3 = (2 * s1**3 - 3 * n * s1 * s2 + n**2 * s3) / (n * (n - 1) * (n - 2))
    k4 = (
        -6 * s1**4 + 12 * n * s1**2 * s2 - 3 * n * (n - 1) * s2**2 - 4 * n * (n + 1) * s1 * s3 + n**2 * (n + 1) * s4
    ) / (n * (n - 1) * (n - 2) * (n - 3))
    return k2, k3, k4


def jackknife_stderr(sample: ArrayLike) -> tuple[float, float, float]:
    """:return: leave-one-out jackknife standard errors of :func:`k_statistics`"""
    x = np.asarray(sample, dtype=np.float64)
    n = x.size
    if n < 5:  # noqa: PLR2004
        raise DomainError("sample", n, "the jackknife needs at least five values")
    centered = x - math.fsum(x) / n
    sums = [math.fsum(centered**r) for r in range(1, 5)]
    # k-statistics are shift invariant, so the leave-one-out sums may stay centered at the full mean
    loo = _k_from_sums(float(n - 1), *(total - centered**r for r, total in enumerate(sums, start=1)))
    return tuple(float(math.sqrt((n - 1) / n * np.sum((k - k.mean()) ** 2))) for k in loo)  # type: ignore[return-value]


@dataclass(frozen=True)
class CumulantReport(Report):
    """The ``k``-th cumulant of :math:`Y_t` or :math:`X_t`: analytic (``None`` if divergent) against k-statistic."""

    kind: KernelKind
    hurst: float
    k: int
    t: float
    analytic: float | None
    empirical: float
    stderr: float
    size: int

    def rows(self) -> list[ReportRow]:
        return [ReportRow(f"kappa_{self.k}[{self.kind.value}]", self.analytic, self.empirical, self.stderr)]


def _truncation(kind: KernelKind, hp: HurstParameter, horizon: float, truncation: float | None) -> float | None:
    if kind is KernelKind.MOLCHAN_GOLOSOV or truncation is not None:
        return truncation
    return mvn_truncation_horizon(hp, horizon)[0]


def sample_values(  # noqa: PLR0913
    kind: KindLike,
    hurst: HurstLike,
    spec: LevyMeasureSpec,
    times: ArrayLike,
    size: int,
    seed: int,
    *,
    truncation: float | None = None,
    workers: int | None = None,
) -> NDArray[np.float64]:
    """:return: a ``(size, len(times))`` array of process values at positive increasing ``times``"""
    kind = as_kind(kind)
    hp = as_hurst(hurst)
    wanted = np.asarray(times, dtype=np.float64).reshape(-1)
    if wanted.size == 0 or wanted[0] <= 0.0 or np.any(np.diff(wanted) <= 0.0):
        raise DomainError("times", wanted, "must be positive and strictly increasing")
    grid = np.concatenate(([0.0], wanted))
    trunc = _truncation(kind, hp, float(wanted[-1]), truncation)

    def one(path_seed: int) -> SamplePath:
        if kind is KernelKind.MOLCHAN_GOLOSOV:
            return simulate_flpmg_jumpsum(hp, spec, grid, path_seed)
        return simulate_flpmvn(hp, spec, grid, path_seed, trunc)

    return ensemble_values(simulate_ensemble(one, size, seed, workers=workers))[:, 1:]


def cumulants(  # noqa: PLR0913
    kind: KindLike,
    hurst: HurstLike,
    spec: LevyMeasureSpec,
    t: float,
    size: int,
    seed: int,
    *,
    orders: Sequence[int] = (2, 3, 4),
    truncation: float | None = None,
    workers: int | None = None,
) -> list[CumulantReport]:
    """
    Second to fourth cumulants of the process at time ``t``.

    The analytic side is :math:`m_k \\int k(t,s)^k ds` through :func:`kernel_moment`; a divergent kernel moment
    yields ``analytic=None``. The empirical side is the k-statistic of ``size`` simulated values with its jackknife
    standard error.

    """
    kind = as_kind(kind)
    hp = as_hurst(hurst)
    if any(k not in (2, 3, 4) for k in orders):
        raise DomainError("orders", orders, "cumulants are reported for k = 2, 3, 4")
    sample = sample_values(kind, hp, spec, [t], size, seed, truncation=truncation, workers=workers)[:, 0]
    empirical = k_statistics(sample)
    stderr = jackknife_stderr(sample)
    reports = []
    for k in orders:
        moment = kernel_moment(kind, hp, t, k)
        analytic = None if moment.divergent else spec.moment(k) * float(moment.value)  # type: ignore[arg-type]
        reports.append(CumulantReport(kind, hp.h, k, float(t), analytic, empirical[k - 2], stderr[k - 2], int(size)))
        _LOGGER.debug("Cumulant k=%s of %s at H=%s: analytic %s", k, kind.value, hp.h, analytic)
    return reports


class SeparationReport(NamedTuple):
    """Two-sample z-test of equal ``k``-th cumulants."""

    k: int
    difference: float
    stderr: float
    analytic_difference: float | None

    @property
    def z_score(self) -> float:
        return abs(self.difference) / self.stderr if self.stderr > 0.0 else math.inf

    def separated(self, threshold: float = Z_THRESHOLD) -> bool:
        return self.z_score > threshold


def cumulant_separation(first: CumulantReport, second: CumulantReport) -> SeparationReport:
    """:return: the z-test of ``first.empirical == second.empirical`` for reports of the same order"""
    if first.k != second.k:
        raise DomainError("k", (first.k, second.k), "both reports must be of the same order")
    analytic = None
    if first.analytic is not None and second.analytic is not None:
        analytic = first.analytic - second.analytic
    return SeparationReport(
        first.k,
        first.empirical - second.empirical,
        math.hypot(first.stderr, second.stderr),
        analytic,
    )


@dataclass(frozen=True)
class CharFnPoint(Report):
    """Joint characteristic function :math:`E \\exp(i \\sum_j u_j Y_{t_j})`, analytic and empirical."""

    times: tuple[float, ...]
    freqs: tuple[float, ...]
    analytic: complex
    empirical: complex | None = None
    stderr: float = math.inf

    def rows(self) -> list[ReportRow]:
        if self.empirical is None:
            return []
        return [
            ReportRow("Re phi", self.analytic.real, self.empirical.real, self.stderr),
            ReportRow("Im phi", self.analytic.imag, self.empirical.imag, self.stderr),
        ]


def _charfn_exponent(
    kind: KernelKind,
    hp: HurstParameter,
    spec: LevyMeasureSpec,
    times: NDArray[np.float64],
    freqs: NDArray[np.float64],
) -> complex:
    if kind is KernelKind.MOLCHAN_GOLOSOV:

        def argument(s: float) -> float:
            return math.fsum(u * mg_kernel(hp, t, s) for t, u in zip(times, freqs) if u)

        pieces = [(0.0, float(times[-1]))]
    else:

        def argument(s: float) -> float:
            return float(np.dot(freqs, mvn_kernel(hp, times, s)))

        pieces = [(-np.inf, -1.0), (-1.0, 0.0), (0.0, float(times[-1]))]
    real, imag = [], []
    for a, b in pieces:
        inner = [float(t) for t in times[:-1] if a < t < b]
        extra = {"points": inner} if inner and math.isfinite(a) else {}
        what = f"characteristic exponent on ({a}, {b})"
        value, _ = checked_quad(lambda s: psi(spec, argument(s)).real, a, b, what, rtol=_CHARFN_RTOL, **extra)
        real.append(value)
        value, _ = checked_quad(
            lambda s: psi(spec, argument(s)).imag, a, b, what, rtol=_CHARFN_RTOL, atol=_CHARFN_ATOL, **extra
        )
        imag.append(value)
    return complex(math.fsum(real), math.fsum(imag))


def charfn(  # noqa: PLR0913
    kind: KindLike,
    hurst: HurstLike,
    spec: LevyMeasureSpec,
    times: ArrayLike,
    freqs: ArrayLike,
    *,
    size: int = 0,
    seed: int = 0,
    truncation: float | None = None,
    workers: int | None = None,
) -> CharFnPoint:
    """
    Joint characteristic function of the process at ``times``.

    Analytic: :math:`\\exp(\\int \\Psi(\\sum_j u_j k(t_j, s)) ds)` by quadrature, the integrand vanishing outside
    ``(0, t_n)`` for the Molchan-Golosov kernel. Empirical (when ``size > 0``): the ensemble mean of
    :math:`\\exp(i \\sum_j u_j Y_{t_j})`.

    """
    kind = as_kind(kind)
    hp = as_hurst(hurst)
    t_arr = np.asarray(times, dtype=np.float64).reshape(-1)
    u_arr = np.asarray(freqs, dtype=np.float64).reshape(-1)
    if t_arr.shape != u_arr.shape or t_arr.size == 0:
        raise DomainError("freqs", u_arr, f"need one frequency per time {t_arr}")
    if t_arr[0] <= 0.0 or np.any(np.diff(t_arr) <= 0.0):
        raise DomainError("times", t_arr, "must be positive and strictly increasing")
    if not np.all(np.isfinite(u_arr)):
        raise DomainError("freqs", u_arr, "must be finite")
    analytic = 1 + 0j if not np.any(u_arr) else cmath.exp(_charfn_exponent(kind, hp, spec, t_arr, u_arr))
    point = CharFnPoint(tuple(t_arr.tolist()), tuple(u_arr.tolist()), analytic)
    if size <= 0:
        return point
    values = sample_values(kind, hp, spec, t_arr, size, seed, truncation=truncation, workers=workers)
    phase = values @ u_arr
    real, real_se = _mean_stderr(np.cos(phase))
    imag, imag_se = _mean_stderr(np.sin(phase))
    return CharFnPoint(point.times, point.freqs, analytic, complex(real, imag), math.hypot(real_se, imag_se))


def _binomial(hits: int, size: int) -> tuple[float, float]:
    frequency = hits / size
    floor = max(frequency, 1.0 / size)
    return frequency, math.sqrt(floor * (1.0 - min(floor, 1.0 - 1.0 / size)) / size)


@dataclass(frozen=True)
class ZeroProbabilityReport(Report):
    """Frequencies of :math:`Y_t = 0` and :math:`X_t = 0` against :math:`e^{-\\lambda t}`."""

    p_mg: float
    stderr_mg: float
    p_mvn: float
    stderr_mvn: float
    #: :math:`e^{-\\lambda t}`, a lower bound of :math:`P(Y_t = 0)`
    threshold: float
    #: :math:`\\lambda (1+t) e^{-\\lambda (1+t)}`
    mvn_bound: float

    def rows(self) -> list[ReportRow]:
        return [
            ReportRow("P(Y_t=0)", self.threshold, self.p_mg, self.stderr_mg),
            ReportRow("P(X_t=0)", self.mvn_bound, self.p_mvn, self.stderr_mvn),
        ]

    def verdict(self, threshold: float = Z_THRESHOLD) -> Verdict:
        ok = self.p_mg >= self.threshold - threshold * self.stderr_mg
        ok = ok and self.p_mvn <= self.mvn_bound + threshold * self.stderr_mvn
        ok = ok and self.p_mg > self.p_mvn
        return Verdict.PASS if ok else Verdict.FAIL


def zero_probability_test(  # noqa: PLR0913
    hurst: HurstLike,
    rate: float,
    t: float,
    size: int,
    seed: int,
    *,
    truncation: float | None = None,
    workers: int | None = None,
) -> ZeroProbabilityReport:
    """
    Estimate :math:`P(Y_t = 0) \\ge e^{-\\lambda t}` and :math:`P(X_t = 0)` for a Rademacher driver on shared paths.

    A Molchan-Golosov value counts as zero when the driver has no jump in ``(0, t)`` or when its jumps cancel to within
    ``ZERO_BAND``; a Mandelbrot-Van Ness value when :math:`|X_t| <` ``ZERO_BAND``.

    """
    hp = as_hurst(hurst)
    if hp.p <= 0.0:
        raise DomainError("H", hp.h, "the zero-probability comparison is stated for H > 1/2")
    spec = LevyMeasureSpec.rademacher(rate)
    grid = np.array([0.0, float(t)])
    trunc = truncation if truncation is not None else mvn_truncation_horizon(hp, t)[0]

    def one(path_seed: int) -> tuple[bool, bool]:
        driver = sample_two_sided(spec, t, path_seed, past=trunc)
        mg_zero = driver.jump_count(0.0, t) == 0
        if not mg_zero:
            mg_zero = abs(simulate_flpmg_jumpsum(hp, spec, grid, path_seed, driver=driver).values[-1]) < ZERO_BAND
        mvn = simulate_flpmvn(hp, spec, grid, path_seed, trunc, driver=driver).values[-1]
        return mg_zero, abs(mvn) < ZERO_BAND

    outcomes = simulate_ensemble(one, size, seed, workers=workers)
    p_mg, se_mg = _binomial(sum(mg for mg, _ in outcomes), size)
    p_mvn, se_mvn = _binomial(sum(mvn for _, mvn in outcomes), size)
    lam = spec.total_rate
    return ZeroProbabilityReport(
        p_mg, se_mg, p_mvn, se_mvn, math.exp(-lam * t), lam * (1.0 + t) * math.exp(-lam * (1.0 + t))
    )


def fbm_covariance(hurst: HurstLike, t: ArrayLike, s: ArrayLike) -> Any:  # noqa: ANN401
    """:return: :math:`\\frac{1}{2}(t^{2H} + s^{2H} - |t-s|^{2H})`"""
    h = as_hurst(hurst).h
    t_arr, s_arr = np.asarray(t, dtype=np.float64), np.asarray(s, dtype=np.float64)
    return 0.5 * (np.abs(t_arr) ** (2 * h) + np.abs(s_arr) ** (2 * h) - np.abs(t_arr - s_arr) ** (2 * h))


@dataclass(frozen=True, eq=False)
class CovarianceReport(Report):
    """Empirical :math:`E Y_t Y_s` on a time grid with standard errors and the analytic overlay."""

    times: NDArray[np.float64]
    empirical: NDArray[np.float64]
    stderr: NDArray[np.float64]
    analytic: NDArray[np.float64]

    def rows(self) -> list[ReportRow]:
        rows = []
        for i, t in enumerate(self.times):
            for j, s in enumerate(self.times):
                if j >= i:
                    quantity = f"E[Y({t:g})Y({s:g})]"
                    cell = (float(self.analytic[i, j]), float(self.empirical[i, j]), float(self.stderr[i, j]))
                    rows.append(ReportRow(quantity, *cell))
        return rows

    @property
    def max_z(self) -> float:
        """:return: the largest cell deviation in standard errors"""
        return max((row.z_score or 0.0) for row in self.rows())


def covariance_grid(paths: Sequence[SamplePath], times: ArrayLike, *, hurst: HurstLike, m2: float) -> CovarianceReport:
    """
    Empirical covariance matrix of the ensemble at ``times`` (points of the sampling grid).

    The processes are centered, so :math:`E Y_t Y_s` is estimated by the mean of the products; the overlay is
    :math:`(m_2/2)(t^{2H} + s^{2H} - |t-s|^{2H})`.

    """
    if len(paths) < 2:  # noqa: PLR2004
        raise DomainError("paths", len(paths), "the covariance needs at least two paths")
    values = ensemble_values(list(paths))
    t_arr = np.asarray(times, dtype=np.float64).reshape(-1)
    selected = values[:, _indices(paths[0].grid, t_arr)]
    products = selected[:, :, None] * selected[:, None, :]
    n = values.shape[0]
    flat = products.reshape(n, -1)
    empirical, stderr = _column_stats(flat)
    size = t_arr.size
    analytic = m2 * fbm_covariance(hurst, t_arr[:, None], t_arr[None, :])
    return CovarianceReport(t_arr, empirical.reshape(size, size), stderr.reshape(size, size), analytic)


@dataclass(frozen=True)
class IncrementReport(Report):
    """:math:`E(Y_t - Y_s)^2` against :math:`m_2 |t-s|^{2H}` for a few pairs."""

    pairs: tuple[tuple[float, float], ...]
    empirical: tuple[float, ...]
    stderr: tuple[float, ...]
    analytic: tuple[float, ...]

    def rows(self) -> list[ReportRow]:
        return [
            ReportRow(f"E(Y({t:g})-Y({s:g}))^2", a, e, se)
            for (s, t), e, se, a in zip(self.pairs, self.empirical, self.stderr, self.analytic)
        ]


def increment_second_moment(
    paths: Sequence[SamplePath],
    pairs: Sequence[tuple[float, float]],
    *,
    hurst: HurstLike,
    m2: float,
) -> IncrementReport:
    """:return: the second moments of the increments over ``(s, t)`` pairs of grid points"""
    h = as_hurst(hurst).h
    values = ensemble_values(list(paths))
    grid = paths[0].grid
    empirical, stderr, analytic = [], [], []
    for s, t in pairs:
        i, j = _indices(grid, [s, t])
        mean, se = _mean_stderr((values[:, j] - values[:, i]) ** 2)
        empirical.append(mean)
        stderr.append(se)
        analytic.append(m2 * abs(t - s) ** (2.0 * h))
    pairs = tuple((float(s), float(t)) for s, t in pairs)
    return IncrementReport(pairs, tuple(empirical), tuple(stderr), tuple(analytic))


@dataclass(frozen=True)
class NonstationarityReport(Report):
    """:math:`P(Y_\\epsilon - Y_0 = 0)` against :math:`P(Y_{1+\\epsilon} - Y_1 = 0)`."""

    epsilon: float
    p_start: float
    stderr_start: float
    p_later: float
    stderr_later: float

    def rows(self) -> list[ReportRow]:
        return [
            ReportRow(f"P(Y({self.epsilon:g})-Y(0)=0)", None, self.p_start, self.stderr_start),
            ReportRow(f"P(Y({1 + self.epsilon:g})-Y(1)=0)", None, self.p_later, self.stderr_later),
        ]

    def verdict(self, threshold: float = Z_THRESHOLD) -> Verdict:
        low = self.p_start - threshold * self.stderr_start
        high = self.p_later + threshold * self.stderr_later
        return Verdict.PASS if low > high else Verdict.FAIL


def nonstationarity_witness(  # noqa: PLR0913
    hurst: HurstLike,
    spec: LevyMeasureSpec,
    epsilon: float,
    size: int,
    seed: int,
    *,
    workers: int | None = None,
) -> NonstationarityReport:
    """
    Witness of non-stationary Molchan-Golosov increments.

    An increment is exactly zero when the driver has no jump before its right end, since every earlier jump moves the
    kernel; so :math:`Y_\\epsilon - Y_0` vanishes far more often than :math:`Y_{1+\\epsilon} - Y_1`.

    """
    epsilon = float(epsilon)
    if not 0.0 < epsilon < 1.0:
        raise DomainError("epsilon", epsilon, "must lie in (0, 1)")
    hp = as_hurst(hurst)
    grid = np.array([0.0, epsilon, 1.0, 1.0 + epsilon])

    def one(path_seed: int) -> tuple[bool, bool]:
        driver = sample_compound_poisson(spec, 1.0 + epsilon, path_seed)
        _, y_eps, y_one, y_later = simulate_flpmg_jumpsum(hp, spec, grid, path_seed, driver=driver).values
        start = driver.jump_count(0.0, epsilon) == 0 or y_eps == 0.0
        later = driver.jump_count(0.0, 1.0 + epsilon) == 0 or y_later == y_one
        return start, later

    outcomes = simulate_ensemble(one, size, seed, workers=workers)
    p_start, se_start = _binomial(sum(a for a, _ in outcomes), size)
    p_later, se_later = _binomial(sum(b for _, b in outcomes), size)
    return NonstationarityReport(epsilon, p_start, se_start, p_later, se_later)


@dataclass(frozen=True)
class ShiftConvergenceReport(Report):
    """:math:`E(Z^s_t - Z^\\infty_t)^2` over shifts, Monte Carlo and by quadrature, with fitted log-log slopes."""

    hurst: float
    t: float
    shifts: tuple[float, ...]
    empirical: tuple[float, ...]
    stderr: tuple[float, ...]
    exact: tuple[float, ...]
    slope_empirical: float
    slope_exact: float
    #: how far below the rate :math:`2H - 2` the empirical slope may fall; it must not exceed zero
    slack: float = 0.3

    @property
    def expected_slope(self) -> float:
        return 2.0 * self.hurst - 2.0

    def rows(self) -> list[ReportRow]:
        rows = [
            ReportRow(f"E(Z^{s:g}-Z^inf)^2", x, e, se)
            for s, e, se, x in zip(self.shifts, self.empirical, self.stderr, self.exact)
        ]
        rows.append(ReportRow("slope", self.expected_slope, self.slope_empirical, 0.0))
        return rows

    def verdict(self, threshold: float = Z_THRESHOLD) -> Verdict:  # noqa: ARG002
        # nan (fewer than two positive estimates) fails both comparisons
        ok = self.expected_slope - self.slack <= self.slope_empirical <= 0.0
        return Verdict.PASS if ok else Verdict.FAIL


def _slope(shifts: Sequence[float], values: Sequence[float]) -> float:
    positive = [(s, v) for s, v in zip(shifts, values) if v > 0.0]
    if len(positive) < 2:  # noqa: PLR2004
        return math.nan
    x, y = zip(*positive)
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def shift_convergence(  # noqa: PLR0913
    hurst: HurstLike,
    spec: LevyMeasureSpec,
    shifts: Sequence[float],
    t: float,
    size: int,
    seed: int,
    *,
    workers: int | None = None,
    exact: bool = True,
) -> ShiftConvergenceReport:
    """
    Convergence of the shifted process to its stationary limit.

    Every path draws one two-sided driver reaching back to the largest shift and evaluates :math:`Z^s_t` for all
    shifts on it. The limit :math:`Z^\\infty_t = c_H \\int ((t-v)_+^p - (-v)_+^p) dL_v` is summed over the same jumps;
    the part of its variance beyond the largest shift is added analytically.

    """
    hp = as_hurst(hurst)
    shifts = tuple(sorted(float(s) for s in shifts))
    if not shifts or shifts[0] <= 0.0:
        raise DomainError("shifts", shifts, "must be positive")
    past = shifts[-1]
    scale = hp.c_mg / hp.c_mvn
    grid = np.array([0.0, float(t)])

    def one(path_seed: int) -> NDArray[np.float64]:
        driver = sample_two_sided(spec, t, path_seed, past=past)
        times, sizes = driver.restrict(-past, t)
        limit = scale * float(mvn_kernel(hp, t, times) @ sizes)
        return np.array(
            [simulate_shifted_mg(hp, spec, s, grid, path_seed, driver=driver).values[-1] - limit for s in shifts]
        )

    errors = np.stack(simulate_ensemble(one, size, seed, workers=workers)) ** 2
    tail = spec.moment(2) * scale**2 * mvn_truncation_loss(hp, t, past, exact=True)
    empirical, stderr = _column_stats(errors)
    empirical = empirical + tail
    m2 = spec.moment(2)
    exact_values = tuple(m2 * shift_error_l2(hp, t, s) for s in shifts) if exact else tuple(math.nan for _ in shifts)
    return ShiftConvergenceReport(
        hp.h,
        float(t),
        shifts,
        tuple(empirical.tolist()),
        tuple(stderr.tolist()),
        exact_values,
        _slope(shifts, empirical.tolist()),
        _slope(shifts, exact_values) if exact else math.nan,
    )


__all__ = [
    "ZERO_BAND",
    "Z_THRESHOLD",
    "CharFnPoint",
    "CovarianceReport",
    "CumulantReport",
    "DyadicQVReport",
    "IncrementReport",
    "NonstationarityReport",
    "Report",
    "ReportRow",
    "SeparationReport",
    "ShiftConvergenceReport",
    "Verdict",
    "ZeroProbabilityReport",
    "charfn",
    "covariance_grid",
    "cumulant_separation",
    "cumulants",
    "dyadic_qv",
    "fbm_covariance",
    "increment_second_moment",
    "jackknife_stderr",
    "k_statistics",
    "nonstationarity_witness",
    "sample_values",
    "shift_convergence",
    "zero_probability_test",
]
