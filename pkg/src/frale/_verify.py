from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Any, Callable, Iterator, Literal, NamedTuple

import numpy as np

from ._analyze import (
    Z_THRESHOLD,
    ZERO_BAND,
    Report,
    ReportRow,
    Verdict,
    charfn,
    covariance_grid,
    cumulant_separation,
    cumulants,
    dyadic_qv,
    increment_second_moment,
    nonstationarity_witness,
    shift_convergence,
    zero_probability_test,
)
from ._driver import LevyAtom, LevyMeasureSpec, derive_seed, sample_compound_poisson
from ._error import AccuracyError, BudgetExceeded, DomainError
from ._io import report_verdict
from ._kernels import (
    MOMENT_RTOL,
    KernelKind,
    checked_quad,
    g1_g2_bounds,
    kernel_moment,
    mg_kernel,
    moment_diverges,
    mvn_fourth_moment_bound,
)
from ._simulate import (
    dyadic_grid,
    make_grid,
    mvn_truncation_loss,
    simulate_ensemble,
    simulate_flpmg_ibp,
    simulate_flpmg_jumpsum,
    simulate_flpmvn,
)
from ._specfun import HurstParameter, as_hurst, constant_CH, constant_CH_integral, constant_cH
from ._wiener import IntegrandFunction, StepFunction, l2h_norm, wiener_integral

if TYPE_CHECKING:
    from numpy.typing import NDArray

    from ._simulate import SamplePath

_LOGGER = logging.getLogger("frale")

#: seconds a suite may run unless told otherwise
DEFAULT_BUDGET = 300.0
#: a warning is logged once a suite has spent this share of its budget
BUDGET_WARNING = 0.8
#: ensemble sizes of the Monte Carlo suites
DEFAULT_SIZES = {
    "covariance": 100_000,
    "qv": 2_000,
    "cumulants": 1_000_000,
    "charfn": 20_000,
    "zeroprob": 100_000,
    "wiener": 100_000,
    "shift-rate": 10_000,
    "schemes": 100,
    "figures": 100,
}
COVARIANCE_Z = 4.0
CONSTANTS_RTOL = 1e-9
ISOMETRY_RTOL = 1e-5
SCHEME_ATOL = 1e-4
QV_EXPONENT_ATOL = 0.1
#: the analytic fourth kernel moments must differ by at least this share
SEPARATION_GAP = 0.05
FIGURE_TRUNCATION = 50.0
#: lower ends of the partial fourth moments that must keep growing where the full moment diverges
DIVERGENCE_CUTOFFS = (1e-2, 1e-4, 1e-6)
#: Hurst parameters where g1 is compared with the fourth moments it is meant to separate
G1_SPOTS = (0.6, 0.65, 0.7)


@dataclass(frozen=True)
class CheckReport(Report):
    """
    Deterministic comparisons.

    ``within``: every row passes when the empirical side lies within its ``stderr`` column (used as the absolute
    tolerance) of the analytic side. ``above``: the empirical side must exceed the analytic one. ``increasing``: the
    empirical column must increase strictly.
    """

    entries: tuple[ReportRow, ...]
    mode: Literal["within", "above", "increasing"] = "within"

    def rows(self) -> list[ReportRow]:
        return list(self.entries)

    def verdict(self, threshold: float = Z_THRESHOLD) -> Verdict:  # noqa: ARG002
        if self.mode == "within":
            ok = all(row.z_score is not None and row.z_score <= 1.0 for row in self.entries)
        elif self.mode == "above":
            ok = all(row.analytic is not None and row.empirical > row.analytic for row in self.entries)
        else:
            values = [row.empirical for row in self.entries]
            ok = all(b > a for a, b in zip(values, values[1:]))
        return Verdict.PASS if ok else Verdict.FAIL


@dataclass(frozen=True)
class EstimateReport(Report):
    """Monte Carlo estimates judged in standard errors."""

    entries: tuple[ReportRow, ...]

    def rows(self) -> list[ReportRow]:
        return list(self.entries)


class Check(NamedTuple):
    name: str
    report: Report
    threshold: float = Z_THRESHOLD


@dataclass(frozen=True)
class VerifyConfig:
    """Settings shared by every suite; ``hurst`` and ``size`` override the suite defaults when given."""

    seed: int
    budget: float = DEFAULT_BUDGET
    hurst: float | None = None
    size: int | None = None
    workers: int | None = None

    def __post_init__(self) -> None:
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise DomainError("seed", self.seed, "must be an integer in [0, 2^64)")
        if not self.budget > 0.0:
            raise DomainError("budget", self.budget, "must be positive")
        if self.hurst is not None:
            as_hurst(self.hurst)
        if self.size is not None and (int(self.size) != self.size or self.size < 5):  # noqa: PLR2004
            raise DomainError("size", self.size, "ensembles need at least five paths")
        if self.workers is not None and self.workers < 1:
            raise DomainError("workers", self.workers, "must be at least 1")

    def size_for(self, suite: str) -> int:
        return int(self.size) if self.size is not None else DEFAULT_SIZES[suite]

    def hurst_or(self, default: float) -> HurstParameter:
        return as_hurst(self.hurst if self.hurst is not None else default)

    def seed_for(self, index: int) -> int:
        return derive_seed(int(self.seed), index)


@dataclass
class SuiteResult:
    """The checks a suite completed, and whether it ran out of time or hit a numerical error."""

    suite: str
    config: VerifyConfig
    checks: list[Check] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)
    elapsed: float = 0.0
    incomplete: bool = False

    @property
    def verdict(self) -> Verdict:
        if self.errors or any(c.report.verdict(c.threshold) is Verdict.FAIL for c in self.checks):
            return Verdict.FAIL
        return Verdict.PASS

    @property
    def exit_code(self) -> int:
        """:return: 3 when the budget ran out, 1 on a failed check, 0 otherwise"""
        if self.incomplete:
            return 3
        return 1 if self.verdict is Verdict.FAIL else 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "suite": self.suite,
            "seed": self.config.seed,
            "verdict": "incomplete" if self.incomplete else self.verdict.value,
            "elapsed": self.elapsed,
            "budget": self.config.budget,
            "checks": [report_verdict(c.name, c.report, c.threshold) for c in self.checks],
            "errors": self.errors,
        }


class _Budget:
    def __init__(self, suite: str, seconds: float) -> None:
        self._suite = suite
        self._seconds = seconds
        self._start = time.monotonic()
        self._warned = False

    @property
    def elapsed(self) -> float:
        return time.monotonic() - self._start

    def check(self) -> None:
        elapsed = self.elapsed
        if elapsed > self._seconds:
            raise BudgetExceeded(self._suite, elapsed, self._seconds)
        if not self._warned and elapsed > BUDGET_WARNING * self._seconds:
            self._warned = True
            _LOGGER.warning("Suite %s has used %.0f of %.0f seconds", self._suite, elapsed, self._seconds)


def _within(quantity: str, expected: float, actual: float, tolerance: float) -> ReportRow:
    return ReportRow(quantity, expected, actual, tolerance)


def _estimate(quantity: str, expected: float, sample: NDArray[np.float64]) -> ReportRow:
    stderr = float(np.std(sample, ddof=1)) / math.sqrt(sample.size)
    return ReportRow(quantity, expected, math.fsum(sample) / sample.size, stderr)


def _constants(config: VerifyConfig) -> Iterator[Check]:  # noqa: ARG001
    rows, closed = [], []
    for h in np.linspace(0.01, 0.99, 50).tolist():
        integral, small = constant_CH_integral(h), constant_cH(h)
        rows.append(_within(f"c_H({h:.4f})", integral, small, CONSTANTS_RTOL * integral))
        closed.append(_within(f"C_H({h:.4f})", integral, constant_CH(h), CONSTANTS_RTOL * integral))
    yield Check("c_H = C_H", CheckReport(tuple(rows)))
    yield Check("C_H closed form", CheckReport(tuple(closed)))


def _isometry(config: VerifyConfig) -> Iterator[Check]:  # noqa: ARG001
    for kind in KernelKind:
        rows = []
        for h in (0.25, 0.4, 0.6, 0.75, 0.9):
            for t in (0.5, 1.0, 2.0):
                expected = t ** (2.0 * h)
                value = float(kernel_moment(kind, h, t, 2).value)  # type: ignore[arg-type]
                rows.append(_within(f"int k^2 (H={h}, t={t})", expected, value, ISOMETRY_RTOL * expected))
        yield Check(f"isometry[{kind.value}]", CheckReport(tuple(rows)))


def _divergence(config: VerifyConfig) -> Iterator[Check]:  # noqa: ARG001
    rows, spots = [], []
    for k in (3, 4, 5):
        upper = 0.5 + 1.0 / k
        for i in range(1, 100):
            h = round(0.01 * i, 2)
            # the origin singularity above 1/2, the diagonal one (t - s)^{k(H - 1/2)} below
            expected = h >= upper - 1e-12 or h <= 1.0 - upper + 1e-12
            reported = moment_diverges(KernelKind.MOLCHAN_GOLOSOV, h, k)
            rows.append(_within(f"divergent(K={k}, H={h})", float(expected), float(reported), 0.0))
        # the full computation on both sides of the upper boundary
        below, above = math.ceil(upper * 100 - 1e-9) / 100 - 0.01, math.ceil(upper * 100 - 1e-9) / 100
        for h, expected in ((below, False), (above, True)):
            reported = kernel_moment(KernelKind.MOLCHAN_GOLOSOV, h, 1.0, k).divergent
            spots.append(_within(f"kernel_moment divergent(K={k}, H={h:.2f})", float(expected), float(reported), 0.0))
    yield Check("divergence rule", CheckReport(tuple(rows)))
    yield Check("divergence at the boundary", CheckReport(tuple(spots)))
    for h in (0.75, 0.8):
        yield Check(f"divergence growth (H={h})", CheckReport(tuple(_partial_moments(h)), mode="increasing"))


def _partial_moments(h: float) -> Iterator[ReportRow]:
    hp = as_hurst(h)
    for eps in DIVERGENCE_CUTOFFS:
        # s = e^w spreads the origin singularity over a long, well scaled range
        value, _ = checked_quad(
            lambda w: mg_kernel(hp, 1.0, math.exp(w)) ** 4 * math.exp(w),
            math.log(eps),
            0.0,
            f"partial fourth moment from {eps:g} (H={h})",
            rtol=MOMENT_RTOL,
        )
        yield ReportRow(f"int_{eps:g}^1 z^4 (H={h})", None, value, 0.0)


def _truncated_cross_loss(hp: HurstParameter, t: float, s: float, truncation: float) -> float:
    # polarization of the dropped part of E X_t X_s
    loss = mvn_truncation_loss(hp, t, truncation, exact=True) + mvn_truncation_loss(hp, s, truncation, exact=True)
    if t != s:
        loss -= mvn_truncation_loss(hp, abs(t - s), truncation + min(t, s), exact=True)
    return loss / 2.0


def _covariance(config: VerifyConfig) -> Iterator[Check]:
    hp = config.hurst_or(0.75)
    spec = LevyMeasureSpec.rademacher(1.0)
    m2 = spec.moment(2)
    times = np.array([0.2, 0.4, 0.6, 0.8, 1.0])
    grid = np.concatenate(([0.0], times))
    size = config.size_for("covariance")

    paths = simulate_ensemble(
        lambda s: simulate_flpmg_jumpsum(hp, spec, grid, s), size, config.seed_for(0), workers=config.workers
    )
    yield Check("covariance[mg]", covariance_grid(paths, times, hurst=hp, m2=m2), COVARIANCE_Z)
    pairs = [(0.0, 0.2), (0.4, 0.6), (0.2, 1.0)]
    yield Check("increments[mg]", increment_second_moment(paths, pairs, hurst=hp, m2=m2))

    def mvn(path_seed: int) -> SamplePath:
        return simulate_flpmvn(hp, spec, grid, path_seed, FIGURE_TRUNCATION)

    paths = simulate_ensemble(mvn, size, config.seed_for(1), workers=config.workers)
    report = covariance_grid(paths, times, hurst=hp, m2=m2)
    dropped = np.array([[_truncated_cross_loss(hp, t, s, FIGURE_TRUNCATION) for s in times] for t in times])
    yield Check("covariance[mvn]", replace(report, analytic=report.analytic - m2 * dropped), COVARIANCE_Z)


def _qv(config: VerifyConfig) -> Iterator[Check]:
    hp = config.hurst_or(0.75)
    spec = LevyMeasureSpec.rademacher(1.0)
    levels = tuple(range(4, 11))
    grid = dyadic_grid(1.0, levels[-1])
    paths = simulate_ensemble(
        lambda s: simulate_flpmg_jumpsum(hp, spec, grid, s),
        config.size_for("qv"),
        config.seed_for(0),
        workers=config.workers,
    )
    report = dyadic_qv(paths, 1.0, levels, hurst=hp, m2=spec.moment(2))
    yield Check("dyadic qv", report)
    exponent = -float(np.polyfit(levels, np.log2(report.means), 1)[0])
    row = _within("decay exponent", 2.0 * hp.h - 1.0, exponent, QV_EXPONENT_ATOL)
    yield Check("qv decay exponent", CheckReport((row,)))


def _cumulants(config: VerifyConfig) -> Iterator[Check]:
    hp = config.hurst_or(0.6)
    spec = LevyMeasureSpec.rademacher(1.0)
    size = config.size_for("cumulants")
    mg4 = kernel_moment(KernelKind.MOLCHAN_GOLOSOV, hp, 1.0, 4)
    mvn4 = kernel_moment(KernelKind.MANDELBROT_VAN_NESS, hp, 1.0, 4)
    if mg4.divergent or mvn4.divergent:
        _LOGGER.warning("Fourth kernel moment diverges at H=%s, skipping the separation", hp.h)
    else:
        gap = (float(mg4.value) - float(mvn4.value)) / float(mvn4.value)  # type: ignore[arg-type]
        yield Check("analytic K=4 gap", CheckReport((ReportRow("(z4 - f4)/f4", SEPARATION_GAP, gap, 0.0),), "above"))
    kw = {"orders": (4,), "workers": config.workers}
    (mg,) = cumulants(KernelKind.MOLCHAN_GOLOSOV, hp, spec, 1.0, size, config.seed_for(0), **kw)
    yield Check("kappa_4[mg]", mg)
    (mvn,) = cumulants(KernelKind.MANDELBROT_VAN_NESS, hp, spec, 1.0, size, config.seed_for(1), **kw)
    yield Check("kappa_4[mvn]", mvn)
    separation = cumulant_separation(mg, mvn)
    row = ReportRow("z(k4[mg] - k4[mvn])", Z_THRESHOLD, separation.z_score, 0.0)
    yield Check("K=4 separation", CheckReport((row,), "above"))

    # an asymmetric measure shows the third cumulant too, finite for H < 5/6
    skewed = LevyMeasureSpec((LevyAtom(1.0, 2.0), LevyAtom(-2.0, 1.0)))
    h3 = hp if 0.5 < hp.h < 5.0 / 6.0 else as_hurst(0.6)  # noqa: PLR2004
    small = max(size // 10, 1_000)
    (mg3,) = cumulants(
        KernelKind.MOLCHAN_GOLOSOV, h3, skewed, 1.0, small, config.seed_for(2), orders=(3,), workers=config.workers
    )
    yield Check("kappa_3[mg] asymmetric", mg3)


def _charfn(config: VerifyConfig) -> Iterator[Check]:
    hp = config.hurst_or(0.75)
    spec = LevyMeasureSpec.rademacher(1.0)
    size = config.size_for("charfn")
    for index, kind in enumerate(KernelKind):
        for times, freqs in (((1.0,), (2.0,)), ((0.5, 1.0), (1.0, -0.5))):
            point = charfn(kind, hp, spec, times, freqs, size=size, seed=config.seed_for(index), workers=config.workers)
            yield Check(f"phi[{kind.value}]{times}", point)


def _zeroprob(config: VerifyConfig) -> Iterator[Check]:
    hp = config.hurst_or(0.75)
    size = config.size_for("zeroprob")
    report = zero_probability_test(hp, 1.0, 0.1, size, config.seed_for(0), workers=config.workers)
    yield Check("zero probability", report)
    spec = LevyMeasureSpec.rademacher(1.0)
    witness = nonstationarity_witness(hp, spec, 0.1, size, config.seed_for(1), workers=config.workers)
    yield Check("non-stationary increments", witness)


def _smooth(u: float) -> float:
    return math.sin(math.pi * u)


def _wiener(config: VerifyConfig) -> Iterator[Check]:
    hp = config.hurst_or(0.75)
    spec = LevyMeasureSpec.rademacher(1.0)
    m2 = spec.moment(2)
    smooth = IntegrandFunction(_smooth, 1.0, 1.0)
    integrands: dict[str, StepFunction | IntegrandFunction] = {
        "1_(0.2,0.7]": StepFunction.indicator(0.2, 0.7),
        "steps": StepFunction.from_pairs(
            [{"upto": 0.3, "level": 1.0}, {"upto": 0.6, "level": -2.0}, {"upto": 1.0, "level": 0.5}]
        ),
        "staircase(sin)": StepFunction.staircase(smooth, 3),
    }
    if hp.p > 0.0:
        integrands["sin"] = smooth
    else:
        _LOGGER.warning("H=%s admits step integrands only, skipping the smooth one", hp.h)
    indicator = StepFunction.indicator(0.3, 0.8)
    grid = np.array([0.0, 0.3, 0.8, 1.0])

    def one(path_seed: int) -> NDArray[np.float64]:
        driver = sample_compound_poisson(spec, 1.0, path_seed)
        values = [wiener_integral(hp, g, driver) for g in integrands.values()]
        path = simulate_flpmg_jumpsum(hp, spec, grid, path_seed, driver=driver).values
        gap = wiener_integral(hp, indicator, driver) - (path[2] - path[1])
        return np.array([*values, gap])

    sample = np.stack(
        simulate_ensemble(one, config.size_for("wiener"), config.seed_for(0), workers=config.workers)
    )
    rows = [
        _estimate(f"Var int {name} dY", m2 * l2h_norm(hp, g) ** 2, sample[:, i] ** 2)
        for i, (name, g) in enumerate(integrands.items())
    ]
    yield Check("wiener isometry", EstimateReport(tuple(rows)))
    worst = float(np.max(np.abs(sample[:, -1])))
    yield Check("indicator = increment", CheckReport((_within("max |int 1 dY - (Y_0.8 - Y_0.3)|", 0.0, worst, 1e-10),)))


def _shift_rate(config: VerifyConfig) -> Iterator[Check]:
    hp = config.hurst_or(0.75)
    spec = LevyMeasureSpec.rademacher(1.0)
    shifts = (2.0, 4.0, 8.0, 16.0, 32.0)
    size = config.size_for("shift-rate")
    report = shift_convergence(hp, spec, shifts, 1.0, size, config.seed_for(0), workers=config.workers)
    yield Check("shift convergence", report)


def _schemes(config: VerifyConfig) -> Iterator[Check]:
    spec = LevyMeasureSpec.rademacher(1.0)
    grid = make_grid(1.0, 8)
    rows = []
    for index, h in enumerate((0.6, 0.75, 0.9)):

        def one(path_seed: int, h: float = h) -> float:
            driver = sample_compound_poisson(spec, 1.0, path_seed)
            jumps = simulate_flpmg_jumpsum(h, spec, grid, path_seed, driver=driver).values
            pathwise = simulate_flpmg_ibp(h, spec, grid, path_seed, driver=driver).values
            return float(np.max(np.abs(jumps - pathwise)))

        gaps = simulate_ensemble(one, config.size_for("schemes"), config.seed_for(index), workers=config.workers)
        rows.append(_within(f"sup |JumpSum - PathwiseIBP| (H={h})", 0.0, max(gaps), SCHEME_ATOL))
    yield Check("scheme equivalence", CheckReport(tuple(rows)))


def _figures(config: VerifyConfig) -> Iterator[Check]:
    hp = config.hurst_or(0.75)
    spec = LevyMeasureSpec.rademacher(1.0)
    grid = make_grid(1.0, 64)
    size = config.size_for("figures")

    def one(path_seed: int) -> tuple[bool, bool]:
        driver = sample_compound_poisson(spec, 1.0, path_seed)
        path = simulate_flpmg_jumpsum(hp, spec, grid, path_seed, driver=driver)
        first = driver.times[0] if driver.count else math.inf
        silent = bool(np.all(path.values[grid <= first] == 0.0))
        mvn = simulate_flpmvn(hp, spec, grid, path_seed, FIGURE_TRUNCATION).values[1]
        return silent, abs(mvn) > ZERO_BAND

    outcomes = simulate_ensemble(one, size, config.seed_for(0), workers=config.workers)
    silent = sum(s for s, _ in outcomes) / size
    moving = sum(m for _, m in outcomes) / size
    yield Check("mg zero before first jump", CheckReport((_within("share of silent starts", 1.0, silent, 0.0),)))
    row = ReportRow("share nonzero at first point", 0.5, moving, 0.0)
    yield Check("mvn moves at once", CheckReport((row,), "above"))
    sweep = [
        ReportRow(f"g1 - g2 (H={h:.4f})", 0.0, g1_g2_bounds(h).difference, 0.0)
        for h in np.linspace(0.5, 0.75, 27)[1:-1].tolist()
    ]
    yield Check("g1 - g2 positive", CheckReport(tuple(sweep), "above"))
    lower, corrected = [], []
    for h in G1_SPOTS:
        g1 = g1_g2_bounds(h).g1
        moment = kernel_moment(KernelKind.MOLCHAN_GOLOSOV, h, 1.0, 4).value
        normalized = float(moment) / constant_CH(h) ** 4  # type: ignore[arg-type]
        lower.append(ReportRow(f"C_H^-4 int z^4 (H={h})", g1, normalized, 0.0))
        corrected.append(ReportRow(f"g1 (H={h})", mvn_fourth_moment_bound(h), g1, 0.0))
    yield Check("g1 below the Molchan-Golosov moment", CheckReport(tuple(lower), "above"))
    yield Check("g1 above the corrected Mandelbrot-Van Ness bound", CheckReport(tuple(corrected), "above"))


SUITES: dict[str, Callable[[VerifyConfig], Iterator[Check]]] = {
    "constants": _constants,
    "isometry": _isometry,
    "divergence": _divergence,
    "covariance": _covariance,
    "qv": _qv,
    "cumulants": _cumulants,
    "charfn": _charfn,
    "zeroprob": _zeroprob,
    "wiener": _wiener,
    "shift-rate": _shift_rate,
    "schemes": _schemes,
    "figures": _figures,
}


def run_suite(name: str, config: VerifyConfig) -> SuiteResult:
    """
    Run one verification suite.

    Checks run in order; once the suite has spent its budget no further check starts and the result is flagged
    incomplete. A numerical error ends the suite as failed.

    :raises DomainError: for an unknown suite name

    """
    if name not in SUITES:
        raise DomainError("suite", name, f"must be one of {', '.join(SUITES)}")
    result = SuiteResult(name, config)
    budget = _Budget(name, config.budget)
    _LOGGER.debug("Attempting suite %s with seed %s", name, config.seed)
    try:
        for check in SUITES[name](config):
            result.checks.append(check)
            _LOGGER.debug("Check %s of suite %s: %s", check.name, name, check.report.verdict(check.threshold).value)
            budget.check()
    except BudgetExceeded as exception:
        _LOGGER.warning("%s, reporting %d checks", exception, len(result.checks))
        result.incomplete = True
    except AccuracyError as exception:
        _LOGGER.warning("Suite %s stopped: %s", name, exception)
        result.errors.append(str(exception))
    result.elapsed = budget.elapsed
    _LOGGER.debug("Suite %s done in %.2fs", name, result.elapsed)
    return result


__all__ = [
    "DEFAULT_BUDGET",
    "DEFAULT_SIZES",
    "SUITES",
    "Check",
    "CheckReport",
    "EstimateReport",
    "SuiteResult",
    "VerifyConfig",
    "run_suite",
]
