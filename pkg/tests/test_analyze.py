from __future__ import annotations

import math
from types import SimpleNamespace

import numpy as np
import pytest
from scipy import stats

from frale import (
    CumulantReport,
    DomainError,
    KernelKind,
    LevyMeasureSpec,
    ReportRow,
    SeparationReport,
    ShiftConvergenceReport,
    Verdict,
    charfn,
    covariance_grid,
    cumulant_separation,
    cumulants,
    dyadic_grid,
    dyadic_qv,
    fbm_covariance,
    increment_second_moment,
    jackknife_stderr,
    k_statistics,
    make_grid,
    nonstationarity_witness,
    psi,
    sample_values,
    shift_convergence,
    simulate_ensemble,
    simulate_flpmg_jumpsum,
    zero_probability_test,
)

SPEC = LevyMeasureSpec.rademacher(1.0)


def test_k_statistics_small_sample() -> None:
    k2, k3, k4 = k_statistics([1.0, 2.0, 3.0, 4.0, 5.0])
    assert k2 == pytest.approx(2.5)
    assert k3 == pytest.approx(0.0, abs=1e-12)
    assert k4 == pytest.approx(-7.5)


def test_k_statistics_match_scipy() -> None:
    sample = np.random.default_rng(0).exponential(size=200)
    expected = [stats.kstat(sample, n) for n in (2, 3, 4)]
    assert k_statistics(sample) == pytest.approx(expected, rel=1e-10)


def test_k_statistics_shift_invariant() -> None:
    sample = np.random.default_rng(1).standard_normal(100)
    assert k_statistics(sample + 1e6) == pytest.approx(k_statistics(sample), rel=1e-6)


def test_jackknife_matches_loop() -> None:
    sample = np.random.default_rng(2).standard_normal(30) ** 3
    n = sample.size
    leave_one_out = np.array([k_statistics(np.delete(sample, i)) for i in range(n)])
    spread = leave_one_out - leave_one_out.mean(axis=0)
    expected = np.sqrt((n - 1) / n * np.sum(spread**2, axis=0))
    assert jackknife_stderr(sample) == pytest.approx(expected, rel=1e-8)


def test_k_statistics_need_values() -> None:
    with pytest.raises(DomainError, match="four"):
        k_statistics([1.0, 2.0, 3.0])
    with pytest.raises(DomainError, match="five"):
        jackknife_stderr([1.0, 2.0, 3.0, 4.0])


@pytest.mark.parametrize(
    ("row", "z_score"),
    [
        (ReportRow("q", 1.0, 1.5, 0.25), 2.0),
        (ReportRow("q", None, 1.5, 0.25), None),
        (ReportRow("q", 1.0, 1.0, 0.0), 0.0),
        (ReportRow("q", 1.0, 1.5, 0.0), math.inf),
    ],
)
def test_report_row_z_score(row: ReportRow, z_score: float | None) -> None:
    assert row.z_score == z_score


def test_divergent_verdict() -> None:
    report = CumulantReport(KernelKind.MOLCHAN_GOLOSOV, 0.8, 4, 1.0, None, 0.3, 0.1, 100)
    assert report.verdict() is Verdict.DIVERGENT_ANALYTIC
    assert report.rows() == [ReportRow("kappa_4[mg]", None, 0.3, 0.1)]


def test_fbm_covariance() -> None:
    assert fbm_covariance(0.5, 0.3, 0.8) == pytest.approx(0.3)
    assert fbm_covariance(0.75, 1.0, 1.0) == pytest.approx(1.0)


@pytest.mark.timeout(120)
def test_dyadic_qv() -> None:
    grid = dyadic_grid(1.0, 6)
    paths = simulate_ensemble(lambda s: simulate_flpmg_jumpsum(0.75, SPEC, grid, s), 300, 1)
    report = dyadic_qv(paths, 1.0, (2, 4, 6), hurst=0.75, m2=1.0)
    assert report.expected == pytest.approx((2.0**-1, 2.0**-2, 2.0**-3))
    assert report.verdict(4.0) is Verdict.PASS
    assert [row.quantity for row in report.rows()] == ["V_2", "V_4", "V_6"]
    with pytest.raises(DomainError, match="dyadic level"):
        dyadic_qv(paths, 1.0, (8,), hurst=0.75, m2=1.0)
    with pytest.raises(DomainError, match="strictly increasing"):
        dyadic_qv(paths, 1.0, (4, 2), hurst=0.75, m2=1.0)


@pytest.mark.timeout(120)
def test_covariance_and_increments() -> None:
    grid = np.array([0.0, 0.5, 1.0])
    paths = simulate_ensemble(lambda s: simulate_flpmg_jumpsum(0.7, SPEC, grid, s), 3000, 2)
    report = covariance_grid(paths, [0.5, 1.0], hurst=0.7, m2=1.0)
    assert len(report.rows()) == 3
    assert report.analytic[0, 1] == pytest.approx(0.5 * (0.5**1.4 + 1.0 - 0.5**1.4))
    assert report.verdict(4.0) is Verdict.PASS
    assert report.max_z < 4.0
    increments = increment_second_moment(paths, [(0.0, 0.5), (0.5, 1.0)], hurst=0.7, m2=1.0)
    assert increments.analytic == pytest.approx((0.5**1.4, 0.5**1.4))
    assert increments.verdict(4.0) is Verdict.PASS
    with pytest.raises(DomainError, match="sampling grid"):
        covariance_grid(paths, [0.25], hurst=0.7, m2=1.0)
    with pytest.raises(DomainError, match="two paths"):
        covariance_grid(paths[:1], [0.5], hurst=0.7, m2=1.0)


def test_sample_values() -> None:
    values = sample_values("mg", 0.7, SPEC, [0.5, 1.0], 10, 3, workers=1)
    assert values.shape == (10, 2)
    with pytest.raises(DomainError, match="times"):
        sample_values("mg", 0.7, SPEC, [1.0, 0.5], 10, 3)


@pytest.mark.timeout(120)
def test_cumulants_second_order() -> None:
    (report,) = cumulants("mg", 0.75, SPEC, 1.0, 4000, 4, orders=(2,))
    assert report.analytic == pytest.approx(1.0, rel=1e-5)
    assert report.verdict(4.0) is Verdict.PASS


def test_cumulants_divergent() -> None:
    reports = cumulants(KernelKind.MOLCHAN_GOLOSOV, 0.8, SPEC, 1.0, 200, 5, orders=(2, 4))
    assert [r.k for r in reports] == [2, 4]
    assert reports[1].analytic is None
    assert reports[1].verdict() is Verdict.DIVERGENT_ANALYTIC
    with pytest.raises(DomainError, match="orders"):
        cumulants("mg", 0.7, SPEC, 1.0, 200, 5, orders=(5,))


def test_cumulant_separation() -> None:
    first = CumulantReport(KernelKind.MOLCHAN_GOLOSOV, 0.6, 4, 1.0, 2.0, 2.1, 0.03, 10)
    second = CumulantReport(KernelKind.MANDELBROT_VAN_NESS, 0.6, 4, 1.0, 1.5, 1.6, 0.04, 10)
    separation = cumulant_separation(first, second)
    assert separation.difference == pytest.approx(0.5)
    assert separation.stderr == pytest.approx(0.05)
    assert separation.analytic_difference == pytest.approx(0.5)
    assert separation.z_score == pytest.approx(10.0)
    assert separation.separated()
    third = CumulantReport(KernelKind.MOLCHAN_GOLOSOV, 0.6, 3, 1.0, 0.0, 0.0, 0.1, 10)
    with pytest.raises(DomainError, match="same order"):
        cumulant_separation(first, third)


def test_separation_without_spread() -> None:
    assert SeparationReport(4, 0.1, 0.0, None).z_score == math.inf


@pytest.mark.parametrize("kind", ["mg", "mvn"])
def test_charfn_at_brownian_index(kind: str) -> None:
    point = charfn(kind, 0.5, SPEC, [1.5], [2.0])
    assert point.analytic == pytest.approx(np.exp(1.5 * psi(SPEC, 2.0)), rel=1e-8)
    assert point.empirical is None
    assert point.rows() == []


def test_charfn_ignores_later_zero_frequency() -> None:
    single = charfn("mg", 0.7, SPEC, [0.5], [1.0]).analytic
    joint = charfn("mg", 0.7, SPEC, [0.5, 1.0], [1.0, 0.0]).analytic
    assert joint == pytest.approx(single, rel=1e-7)


def test_charfn_zero_frequency() -> None:
    assert charfn("mvn", 0.7, SPEC, [1.0], [0.0]).analytic == 1.0


@pytest.mark.parametrize("kind", ["mg", "mvn"])
def test_charfn_asymmetric_measure(kind: str) -> None:
    spec = LevyMeasureSpec.centered([(1.0, 1.0), (-0.5, 2.0)])
    point = charfn(kind, 0.5, spec, [1.5], [2.0])
    expected = np.exp(1.5 * psi(spec, 2.0))
    assert point.analytic.imag != 0.0
    assert point.analytic == pytest.approx(expected, rel=1e-8)


def test_charfn_symmetric_measure_is_real() -> None:
    assert charfn("mg", 0.7, SPEC, [0.5, 1.0], [1.0, -0.5]).analytic.imag == pytest.approx(0.0, abs=1e-10)


@pytest.mark.timeout(120)
@pytest.mark.parametrize("kind", ["mg", "mvn"])
def test_charfn_empirical(kind: str) -> None:
    point = charfn(kind, 0.75, SPEC, [0.5, 1.0], [1.0, -0.5], size=2000, seed=6, truncation=50.0)
    assert point.empirical is not None
    assert point.verdict(4.0) is Verdict.PASS


@pytest.mark.parametrize(
    ("times", "freqs"),
    [([1.0, 0.5], [1.0, 1.0]), ([1.0], [1.0, 2.0]), ([0.0], [1.0]), ([1.0], [math.nan])],
)
def test_charfn_invalid(times: list[float], freqs: list[float]) -> None:
    with pytest.raises(DomainError):
        charfn("mg", 0.7, SPEC, times, freqs)


@pytest.mark.timeout(120)
def test_zero_probability() -> None:
    report = zero_probability_test(0.75, 1.0, 0.1, 2000, 7, truncation=50.0)
    assert report.threshold == pytest.approx(math.exp(-0.1))
    assert report.p_mvn == 0.0
    assert report.p_mg > 0.85
    assert report.verdict(4.0) is Verdict.PASS
    with pytest.raises(DomainError, match="H > 1/2"):
        zero_probability_test(0.4, 1.0, 0.1, 10, 7)


def test_zero_probability_counts_cancelled_jumps(monkeypatch: pytest.MonkeyPatch) -> None:
    def cancelled(*_args: object, **_kwargs: object) -> SimpleNamespace:
        return SimpleNamespace(values=np.array([0.0, 1e-15]))

    monkeypatch.setattr("frale._analyze.simulate_flpmg_jumpsum", cancelled)
    report = zero_probability_test(0.75, 5.0, 1.0, 50, 3, truncation=5.0, workers=1)
    assert report.p_mg == 1.0


@pytest.mark.timeout(120)
def test_nonstationarity_witness() -> None:
    report = nonstationarity_witness(0.75, SPEC, 0.1, 1000, 8)
    assert report.p_start == pytest.approx(math.exp(-0.1), abs=0.05)
    assert report.p_later == pytest.approx(math.exp(-1.1), abs=0.06)
    assert report.verdict() is Verdict.PASS
    with pytest.raises(DomainError, match="epsilon"):
        nonstationarity_witness(0.75, SPEC, 1.5, 10, 8)


def test_shift_convergence_structure() -> None:
    report = shift_convergence(0.75, SPEC, (4.0, 2.0), 1.0, 50, 9, exact=False)
    assert report.shifts == (2.0, 4.0)
    assert len(report.rows()) == 3
    assert all(value > 0.0 for value in report.empirical)
    assert math.isnan(report.slope_exact)
    with pytest.raises(DomainError, match="shifts"):
        shift_convergence(0.75, SPEC, (0.0, 2.0), 1.0, 50, 9)


@pytest.mark.parametrize(("slope", "verdict"), [(-0.6, Verdict.PASS), (0.1, Verdict.FAIL), (-0.9, Verdict.FAIL)])
def test_shift_convergence_verdict(slope: float, verdict: Verdict) -> None:
    report = ShiftConvergenceReport(0.75, 1.0, (2.0, 4.0), (0.2, 0.13), (0.01, 0.01), (0.2, 0.13), slope, -0.6)
    assert report.expected_slope == pytest.approx(-0.5)
    assert report.verdict() is verdict


def test_shift_convergence_verdict_nan() -> None:
    report = ShiftConvergenceReport(0.75, 1.0, (2.0,), (0.2,), (0.01,), (0.2,), math.nan, math.nan)
    assert report.verdict() is Verdict.FAIL


def test_grid_used_by_reports() -> None:
    grid = make_grid(1.0, 4)
    paths = simulate_ensemble(lambda s: simulate_flpmg_jumpsum(0.7, SPEC, grid, s), 5, 1, workers=1)
    report = covariance_grid(paths, [0.25, 1.0], hurst=0.7, m2=1.0)
    assert report.times.tolist() == [0.25, 1.0]
