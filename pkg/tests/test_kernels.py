from __future__ import annotations

import mpmath
import numpy as np
import pytest

from frale import (
    DomainError,
    HurstParameter,
    KernelKind,
    KernelMomentResult,
    constant_CH,
    constant_cH,
    g1_g2_bounds,
    kernel_moment,
    mg_kernel,
    mg_kernel_l2,
    mg_kernel_origin,
    mg_kernel_row,
    mg_kernel_sderivative,
    moment_diverges,
    mvn_fourth_moment_bound,
    mvn_kernel,
    shift_error_l2,
    shifted_mg_kernel,
)
from frale._kernels import checked_quad


def _mpmath_mg_kernel(h: float, t: float, s: float) -> float:
    p = h - 0.5
    return constant_cH(h) * (t - s) ** p * float(mpmath.hyp2f1(-p, p, h + 0.5, (s - t) / s))


@pytest.mark.parametrize("s", [-0.5, 0.0, 1.0, 1.5])
def test_mg_kernel_vanishes_outside(s: float) -> None:
    assert mg_kernel(0.7, 1.0, s) == 0.0


def test_kernels_at_brownian_motion() -> None:
    assert mg_kernel(0.5, 2.0, 0.3) == 1.0
    assert mvn_kernel(0.5, 2.0, 0.3) == pytest.approx(1.0)
    assert mvn_kernel(0.5, 2.0, -0.3) == 0.0


@pytest.mark.parametrize("h", [0.1, 0.3, 0.45, 0.55, 0.7, 0.9])
@pytest.mark.parametrize("s", [0.01, 0.2, 0.5, 0.95])
def test_mg_kernel_matches_mpmath(h: float, s: float) -> None:
    assert mg_kernel(h, 1.0, s) == pytest.approx(_mpmath_mg_kernel(h, 1.0, s), rel=1e-8)


@pytest.mark.parametrize("s", [0.05, 0.4, 0.9, 1.7])
def test_mg_kernel_forms_agree(s: float) -> None:
    integral = mg_kernel(0.7, 2.0, s, form="integral")
    hypergeometric = mg_kernel(0.7, 2.0, s, form="hypergeometric")
    assert integral == pytest.approx(hypergeometric, rel=1e-8)


def test_mg_kernel_integral_form_needs_long_memory() -> None:
    with pytest.raises(DomainError, match="H > 1/2"):
        mg_kernel(0.3, 1.0, 0.5, form="integral")


@pytest.mark.parametrize("h", [0.3, 0.7])
def test_mg_kernel_at_time_zero(h: float) -> None:
    assert mg_kernel(h, 0.0, 0.5) == 0.0
    assert mg_kernel(h, 0.0, 0.0) == 0.0
    assert mg_kernel_row(h, 0.5, [0.0]).tolist() == [0.0]


def test_mg_kernel_negative_time() -> None:
    with pytest.raises(DomainError, match="t=-1.0"):
        mg_kernel(0.7, -1.0, 0.5)


@pytest.mark.parametrize("h", [0.3, 0.75])
def test_mg_kernel_row(h: float) -> None:
    times = np.array([1.0, 0.2, 0.37, 0.5, 0.375, 0.8, 0.9999, 0.6])
    row = mg_kernel_row(h, 0.37, times)
    expected = [mg_kernel(h, t, 0.37) for t in times]
    assert row.shape == times.shape
    assert row == pytest.approx(expected, rel=1e-8, abs=1e-14)
    assert row[1] == row[2] == 0.0


def test_mg_kernel_row_dense_grid() -> None:
    times = np.linspace(0.0, 1.0, 257)
    row = mg_kernel_row(0.8, 0.123, times)
    expected = [mg_kernel(0.8, t, 0.123) for t in times]
    assert row == pytest.approx(expected, rel=1e-8, abs=1e-14)


def test_mg_kernel_sderivative() -> None:
    step = 1e-4
    numeric = (mg_kernel(0.75, 1.0, 0.4 + step) - mg_kernel(0.75, 1.0, 0.4 - step)) / (2 * step)
    assert mg_kernel_sderivative(0.75, 1.0, 0.4) == pytest.approx(numeric, rel=1e-5)


def test_mg_kernel_sderivative_domain() -> None:
    with pytest.raises(DomainError, match="H > 1/2"):
        mg_kernel_sderivative(0.4, 1.0, 0.5)
    with pytest.raises(DomainError, match="s=1.0"):
        mg_kernel_sderivative(0.7, 1.0, 1.0)


def test_mvn_kernel_broadcasts() -> None:
    s = np.array([-2.0, -0.5, 0.5, 1.5])
    values = mvn_kernel(0.7, 1.0, s)
    expected = constant_CH(0.7) * np.array([3.0**0.2 - 2.0**0.2, 1.5**0.2 - 0.5**0.2, 0.5**0.2, 0.0])
    assert values == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("kind", list(KernelKind))
@pytest.mark.parametrize("h", [0.25, 0.4, 0.6, 0.75, 0.9])
@pytest.mark.parametrize("t", [0.5, 2.0])
def test_isometry(kind: KernelKind, h: float, t: float) -> None:
    result = kernel_moment(kind, h, t, 2)
    assert not result.divergent
    assert result.value == pytest.approx(t ** (2 * h), rel=1e-5)


def test_mg_kernel_l2() -> None:
    assert mg_kernel_l2(0.7, 1.3) == pytest.approx(1.3**1.4, rel=1e-5)


@pytest.mark.parametrize(
    ("kind", "h", "k", "divergent"),
    [
        (KernelKind.MOLCHAN_GOLOSOV, 0.8, 4, True),
        (KernelKind.MOLCHAN_GOLOSOV, 0.75, 4, True),
        (KernelKind.MOLCHAN_GOLOSOV, 0.7, 5, True),
        (KernelKind.MOLCHAN_GOLOSOV, 0.7, 4, False),
        (KernelKind.MOLCHAN_GOLOSOV, 0.9, 2, False),
        (KernelKind.MOLCHAN_GOLOSOV, 0.25, 4, True),
        (KernelKind.MOLCHAN_GOLOSOV, 0.3, 4, False),
        (KernelKind.MANDELBROT_VAN_NESS, 0.8, 4, False),
        (KernelKind.MANDELBROT_VAN_NESS, 0.95, 5, False),
        (KernelKind.MANDELBROT_VAN_NESS, 0.2, 4, True),
    ],
)
def test_moment_diverges(kind: KernelKind, h: float, k: int, divergent: bool) -> None:
    assert moment_diverges(kind, h, k) is divergent


def test_divergent_moment() -> None:
    result = kernel_moment("mg", 0.8, 1.0, 4)
    assert result.divergent
    assert result.value is None
    assert str(result) == "divergent"


def test_mvn_moment_finite_where_mg_diverges() -> None:
    result = kernel_moment("mvn", 0.8, 1.0, 4)
    assert not result.divergent
    assert result.value > 0.0
    assert result.tail_bound < 1e-7 * result.value
    assert str(result) == repr(result.value)


def test_moment_self_similarity() -> None:
    one = kernel_moment(KernelKind.MANDELBROT_VAN_NESS, 0.7, 1.0, 3).value
    two = kernel_moment(KernelKind.MANDELBROT_VAN_NESS, 0.7, 2.0, 3).value
    assert two == pytest.approx(2.0 ** (1.0 + 3 * 0.2) * one, rel=1e-12)


@pytest.mark.parametrize("k", [3, 4])
def test_mg_moment_exceeds_mvn(k: int) -> None:
    mg = kernel_moment(KernelKind.MOLCHAN_GOLOSOV, 0.6, 1.0, k).value
    mvn = kernel_moment(KernelKind.MANDELBROT_VAN_NESS, 0.6, 1.0, k).value
    assert mg > mvn > 0.0


@pytest.mark.parametrize("k", [1, 0, 2.5])
def test_moment_order(k: float) -> None:
    with pytest.raises(DomainError, match="K="):
        kernel_moment("mg", 0.7, 1.0, k)  # type: ignore[arg-type]


def test_unknown_kind() -> None:
    with pytest.raises(DomainError, match="kind='fbm'"):
        kernel_moment("fbm", 0.7, 1.0, 2)


def test_moment_result_is_value_or_divergent() -> None:
    with pytest.raises(ValueError, match="either divergent or carries a value"):
        KernelMomentResult(KernelKind.MOLCHAN_GOLOSOV, 4, HurstParameter(0.8), 1.0, None)


@pytest.mark.parametrize("h", [0.51, 0.55, 0.6, 0.7, 0.74])
def test_g1_exceeds_g2(h: float) -> None:
    bounds = g1_g2_bounds(h)
    assert bounds.difference == bounds.g1 - bounds.g2
    assert bounds.difference > 0.0


@pytest.mark.parametrize("h", [0.5, 0.75, 0.3])
def test_g1_g2_range(h: float) -> None:
    with pytest.raises(DomainError, match="1/2 < H < 3/4"):
        g1_g2_bounds(h)


@pytest.mark.parametrize("h", [0.55, 0.65, 0.8])
def test_mvn_fourth_moment_bound(h: float) -> None:
    normalized = kernel_moment(KernelKind.MANDELBROT_VAN_NESS, h, 1.0, 4).value / constant_CH(h) ** 4
    assert normalized <= mvn_fourth_moment_bound(h)


@pytest.mark.parametrize("v", [-0.5, 0.5])
def test_shifted_kernel_tends_to_mvn(v: float) -> None:
    limit = mvn_kernel(0.75, 1.0, v)
    assert shifted_mg_kernel(0.75, 1.0, v, 1e4) == pytest.approx(limit, rel=1e-3)
    assert shifted_mg_kernel(0.75, 1.0, v, 3.0, unit_hypergeometric=True) == pytest.approx(limit, rel=1e-12)


def test_shifted_kernel_before_shift() -> None:
    assert shifted_mg_kernel(0.75, 1.0, -3.5, 3.0) == 0.0
    with pytest.raises(DomainError, match="shift"):
        shifted_mg_kernel(0.75, 1.0, 0.5, 0.0)


@pytest.mark.timeout(120)
def test_shift_error_decreases() -> None:
    near, far = shift_error_l2(0.75, 1.0, 2.0), shift_error_l2(0.75, 1.0, 8.0)
    assert 0.0 < far < near


@pytest.mark.parametrize("h", [0.6, 0.75, 0.9])
def test_mg_kernel_does_not_vanish_at_origin(h: float) -> None:
    values = [mg_kernel(h, 1.0, s) for s in (1e-2, 1e-4, 1e-6)]
    assert all(v > 0.0 for v in values)
    assert values[0] < values[1] < values[2]


@pytest.mark.parametrize("h", [0.3, 0.6, 0.75, 0.9])
def test_mg_kernel_origin(h: float) -> None:
    # the next order is s^{2|H - 1/2|} smaller
    s = 1e-30
    scaled = mg_kernel(h, 1.0, s, form="hypergeometric") * s ** abs(h - 0.5)
    assert scaled == pytest.approx(mg_kernel_origin(h, 1.0), rel=1e-3)


def test_mg_kernel_origin_scaling() -> None:
    assert mg_kernel_origin(0.7, 2.0) == pytest.approx(2.0**0.4 * mg_kernel_origin(0.7, 1.0), rel=1e-14)
    assert mg_kernel_origin(0.3, 2.0) == mg_kernel_origin(0.3, 1.0)
    assert mg_kernel_origin(0.5, 3.0) == 1.0


def test_checked_quad_endpoint_limits() -> None:
    def regular(x: float) -> float:
        if x in {0.0, 1.0}:
            raise ZeroDivisionError
        return 1.0

    value, _ = checked_quad(
        regular, 0.0, 1.0, "arcsine mass", rtol=1e-10, limits=(1.0, 1.0), weight="alg", wvar=(-0.5, -0.5)
    )
    assert value == pytest.approx(np.pi, rel=1e-12)


@pytest.mark.parametrize("kind", list(KernelKind))
@pytest.mark.parametrize("h", [0.25, 0.4, 0.6, 0.75, 0.9])
def test_moments_finite_across_hurst(kind: KernelKind, h: float) -> None:
    for k in (2, 3):
        if moment_diverges(kind, h, k):
            continue
        result = kernel_moment(kind, h, 1.0, k)
        assert result.value is not None
        assert np.isfinite(result.value)
    assert kernel_moment(kind, h, 1.0, 2).value > 0.0


@pytest.mark.parametrize(("h", "k"), [(0.6, 4), (0.3, 3)])
def test_mg_moment_matches_mpmath(h: float, k: int) -> None:
    expected = float(mpmath.quad(lambda s: _mpmath_mg_kernel(h, 1.0, s) ** k, [0, 0.5, 1]))
    assert kernel_moment(KernelKind.MOLCHAN_GOLOSOV, h, 1.0, k).value == pytest.approx(expected, rel=1e-5)


@pytest.mark.parametrize("h", [0.6, 0.75, 0.9])
@pytest.mark.parametrize(("a", "b"), [(0.1, 0.4), (0.5, 0.99), (0.01, 0.99)])
def test_mg_kernel_sderivative_integrates_to_kernel(h: float, a: float, b: float) -> None:
    integral, _ = checked_quad(lambda s: mg_kernel_sderivative(h, 1.0, s), a, b, "derivative", rtol=1e-9)
    assert integral == pytest.approx(mg_kernel(h, 1.0, b) - mg_kernel(h, 1.0, a), rel=1e-7)


@pytest.mark.parametrize("h", [0.6, 0.75, 0.9])
def test_mg_kernel_sderivative_blows_up_below_t(h: float) -> None:
    p = h - 0.5
    gaps = (1e-2, 1e-4, 1e-6)
    values = [mg_kernel_sderivative(h, 1.0, 1.0 - gap) for gap in gaps]
    assert values[0] > values[1] > values[2]
    assert values[2] == pytest.approx(-p * constant_cH(h) * gaps[2] ** (p - 1.0), rel=1e-3)


@pytest.mark.timeout(120)
@pytest.mark.parametrize("h", [0.3, 0.7])
def test_increment_isometry(h: float) -> None:
    s, t = 0.4, 1.0
    inner, _ = checked_quad(
        lambda u: (mg_kernel(h, t, u) - mg_kernel(h, s, u)) ** 2, 0.0, s, "increment on (0, s)", rtol=1e-6
    )
    outer, _ = checked_quad(lambda u: mg_kernel(h, t, u) ** 2, s, t, "increment on (s, t)", rtol=1e-6)
    assert inner + outer == pytest.approx((t - s) ** (2 * h), rel=1e-5)


@pytest.mark.parametrize("h", [0.5 - 1e-9, 0.5 + 1e-9])
def test_kernels_reduce_to_indicator(h: float) -> None:
    for s in (0.05, 0.5, 0.95):
        assert mg_kernel(h, 1.0, s) == pytest.approx(1.0, abs=1e-6)
        assert mvn_kernel(h, 1.0, s) == pytest.approx(1.0, abs=1e-6)
    assert mvn_kernel(h, 1.0, -0.5) == pytest.approx(0.0, abs=1e-6)
    assert mg_kernel(h, 1.0, 1.5) == 0.0
