from __future__ import annotations

import logging
import math

import numpy as np
import pytest

from frale import (
    DomainError,
    DriverPath,
    LevyMeasureSpec,
    PathMeta,
    ProcessKind,
    SamplePath,
    SchemeTag,
    derive_seed,
    dyadic_grid,
    ensemble_values,
    fbm_weights,
    make_grid,
    mvn_truncation_horizon,
    mvn_truncation_loss,
    sample_brownian_increments,
    sample_compound_poisson,
    sample_two_sided,
    simulate_ensemble,
    simulate_fbm_mg,
    simulate_flpmg_ibp,
    simulate_flpmg_jumpsum,
    simulate_flpmvn,
    simulate_mixed,
    simulate_shifted_mg,
)

SPEC = LevyMeasureSpec.rademacher(3.0)


def test_make_grid() -> None:
    assert make_grid(2.0, 4).tolist() == [0.0, 0.5, 1.0, 1.5, 2.0]
    assert dyadic_grid(1.0, 3).size == 9
    with pytest.raises(DomainError, match="steps"):
        make_grid(1.0, 0)
    with pytest.raises(DomainError, match="T="):
        make_grid(0.0, 4)
    with pytest.raises(DomainError, match="level"):
        dyadic_grid(1.0, -1)


@pytest.mark.parametrize(
    ("grid", "values"),
    [
        ([0.0, 1.0], [1.0, 0.0]),
        ([0.1, 1.0], [0.0, 0.0]),
        ([0.0, 1.0, 0.5], [0.0, 0.0, 0.0]),
        ([0.0, 1.0], [0.0, math.inf]),
        ([0.0, 1.0], [0.0]),
    ],
)
def test_sample_path_invalid(grid: list[float], values: list[float]) -> None:
    meta = PathMeta(ProcessKind.FLPMG, 0.7, SchemeTag.JUMP_SUM, 0)
    with pytest.raises(DomainError):
        SamplePath(np.array(grid), np.array(values), meta)


def test_sample_path() -> None:
    meta = PathMeta(ProcessKind.FBM, 0.7, SchemeTag.RIEMANN_L2, 0)
    path = SamplePath(np.array([0.0, 0.5, 1.0]), np.array([0.0, 1.0, -1.0]), meta)
    assert path.horizon == 1.0
    assert path.increments().tolist() == [1.0, -2.0]
    assert path.exp() == pytest.approx([1.0, math.e, 1.0 / math.e])


def test_jumpsum_deterministic() -> None:
    grid = make_grid(1.0, 16)
    first = simulate_flpmg_jumpsum(0.7, SPEC, grid, 5)
    assert np.array_equal(first.values, simulate_flpmg_jumpsum(0.7, SPEC, grid, 5).values)
    assert not np.array_equal(first.values, simulate_flpmg_jumpsum(0.7, SPEC, grid, 6).values)
    assert first.meta == PathMeta(ProcessKind.FLPMG, 0.7, SchemeTag.JUMP_SUM, 5, SPEC.digest())


@pytest.mark.parametrize("h", [0.3, 0.75])
def test_mg_zero_before_first_jump(h: float) -> None:
    grid = make_grid(1.0, 64)
    for index in range(20):
        seed = derive_seed(3, index)
        driver = sample_compound_poisson(SPEC, 1.0, seed)
        path = simulate_flpmg_jumpsum(h, SPEC, grid, seed, driver=driver)
        first = driver.times[0] if driver.count else math.inf
        assert np.all(path.values[grid <= first] == 0.0)


def test_jumpsum_at_brownian_index_is_driver() -> None:
    grid = make_grid(1.0, 32)
    driver = sample_two_sided(SPEC, 1.0, 8)
    mg = simulate_flpmg_jumpsum(0.5, SPEC, grid, 8, driver=driver)
    mvn = simulate_flpmvn(0.5, SPEC, grid, 8, 1.0, driver=driver)
    assert mg.values == pytest.approx(driver.value_at(grid), abs=1e-12)
    assert mvn.values == pytest.approx(driver.value_at(grid), abs=1e-12)


@pytest.mark.parametrize("h", [0.6, 0.75, 0.9])
def test_schemes_agree(h: float) -> None:
    grid = make_grid(1.0, 8)
    for index in range(3):
        seed = derive_seed(4, index)
        driver = sample_compound_poisson(SPEC, 1.0, seed)
        jumps = simulate_flpmg_jumpsum(h, SPEC, grid, seed, driver=driver)
        pathwise = simulate_flpmg_ibp(h, SPEC, grid, seed, driver=driver)
        assert pathwise.meta.scheme is SchemeTag.PATHWISE_IBP
        assert np.max(np.abs(jumps.values - pathwise.values)) < 1e-4


@pytest.mark.parametrize("h", [0.6, 0.9])
def test_ibp_jump_just_before_grid_time(h: float) -> None:
    grid = np.array([0.0, 0.5, 1.0])
    driver = DriverPath(np.array([0.3, 0.5, 1.0 - 1e-6]), np.array([1.0, -1.0, 1.0]), 1.0, 0, SPEC)
    jumps = simulate_flpmg_jumpsum(h, SPEC, grid, 0, driver=driver)
    pathwise = simulate_flpmg_ibp(h, SPEC, grid, 0, driver=driver)
    assert np.all(np.isfinite(pathwise.values))
    assert pathwise.values == pytest.approx(jumps.values, abs=1e-4)


def test_ibp_needs_long_memory() -> None:
    with pytest.raises(DomainError, match="H > 1/2"):
        simulate_flpmg_ibp(0.4, SPEC, make_grid(1.0, 4), 0)


def test_driver_must_cover_grid() -> None:
    driver = sample_compound_poisson(SPEC, 0.5, 1)
    with pytest.raises(DomainError, match="must cover"):
        simulate_flpmg_jumpsum(0.7, SPEC, make_grid(1.0, 4), 1, driver=driver)
    with pytest.raises(DomainError, match="another measure"):
        simulate_flpmg_jumpsum(0.7, LevyMeasureSpec.rademacher(), make_grid(0.5, 4), 1, driver=driver)


def test_truncation_horizon() -> None:
    horizon, capped = mvn_truncation_horizon(0.6, 1.0)
    assert not capped
    assert 1.0 <= horizon < 1e5
    assert mvn_truncation_loss(0.6, 1.0, horizon) == pytest.approx(1e-3, rel=1e-9)


def test_truncation_horizon_capped(caplog: pytest.LogCaptureFixture) -> None:
    caplog.set_level(logging.WARNING)
    horizon, capped = mvn_truncation_horizon(0.9, 2.0)
    assert capped
    assert horizon == 2e5
    assert [r.name for r in caplog.records] == ["frale"]
    assert "capped" in caplog.messages[0]


@pytest.mark.parametrize("h", [0.3, 0.7])
def test_truncation_loss_bound(h: float) -> None:
    exact = mvn_truncation_loss(h, 1.0, 20.0, exact=True)
    assert 0.0 < exact <= mvn_truncation_loss(h, 1.0, 20.0)


def test_mvn_meta() -> None:
    grid = make_grid(1.0, 8)
    path = simulate_flpmvn(0.7, SPEC, grid, 2, 30.0)
    assert path.meta.kind is ProcessKind.FLPMVN
    assert path.meta.scheme is SchemeTag.TRUNCATED_MVN
    assert path.meta.truncation == 30.0
    assert not path.meta.truncation_capped
    with pytest.raises(DomainError, match="S_trunc"):
        simulate_flpmvn(0.7, SPEC, grid, 2, -1.0)


def test_mvn_moves_before_first_future_jump() -> None:
    grid = make_grid(1.0, 64)
    moving = 0
    for index in range(20):
        path = simulate_flpmvn(0.75, SPEC, grid, derive_seed(6, index), 50.0)
        moving += abs(path.values[1]) > 1e-12
    assert moving > 10


def test_shifted_unit_hypergeometric_is_truncated_mvn() -> None:
    grid = make_grid(1.0, 8)
    driver = sample_two_sided(SPEC, 1.0, 12, past=4.0)
    shifted = simulate_shifted_mg(0.75, SPEC, 4.0, grid, 12, driver=driver, unit_hypergeometric=True)
    mvn = simulate_flpmvn(0.75, SPEC, grid, 12, 4.0, driver=driver)
    assert shifted.values == pytest.approx(mvn.values, rel=1e-12, abs=1e-14)
    assert shifted.meta.shift == 4.0


def test_shifted_invalid_shift() -> None:
    with pytest.raises(DomainError, match="shift"):
        simulate_shifted_mg(0.75, SPEC, 0.0, make_grid(1.0, 4), 0)


def test_fbm_weights_at_brownian_index() -> None:
    weights = fbm_weights(0.5, make_grid(1.0, 4))
    assert weights.tolist() == np.tril(np.ones((5, 4)), -1).tolist()


@pytest.mark.parametrize("h", [0.3, 0.7])
def test_fbm_weights_variance(h: float) -> None:
    grid = make_grid(1.0, 16)
    weights = fbm_weights(h, grid)
    variance = (weights**2) @ np.diff(grid)
    # cell averages are an L2 projection of the kernel, so the variance can only shrink
    assert np.all(variance <= grid ** (2 * h) * (1.0 + 1e-8))
    assert variance[-1] > 0.85


@pytest.mark.parametrize("h", [0.1, 0.25, 0.4, 0.6, 0.9])
def test_fbm_weights_finite_across_hurst(h: float) -> None:
    grid = make_grid(2.0, 8)
    weights = fbm_weights(h, grid)
    assert np.all(np.isfinite(weights))
    assert np.all(weights[0] == 0.0)
    assert np.all((weights**2) @ np.diff(grid) <= grid ** (2 * h) * (1.0 + 1e-8))


@pytest.mark.timeout(120)
def test_fbm_ensemble_variance() -> None:
    grid = make_grid(1.0, 8)
    weights = fbm_weights(0.7, grid)
    paths = simulate_ensemble(lambda s: simulate_fbm_mg(0.7, grid, s, weights=weights), 4000, 17, workers=1)
    values = ensemble_values(paths)[:, -1]
    expected = float((weights[-1] ** 2) @ np.diff(grid))
    assert values.var(ddof=1) == pytest.approx(expected, rel=0.1)
    assert paths[0].meta.kind is ProcessKind.FBM


def test_fbm_weights_shape() -> None:
    with pytest.raises(DomainError, match="weights"):
        simulate_fbm_mg(0.7, make_grid(1.0, 4), 0, weights=np.zeros((4, 4)))


def test_mixed() -> None:
    grid = make_grid(1.0, 16)
    mixed = simulate_mixed(0.7, SPEC, 2.0, 0.5, grid, 21)
    fractional = simulate_flpmg_jumpsum(0.7, SPEC, grid, 21)
    brownian = sample_brownian_increments(grid, 21).values()
    assert mixed.values == pytest.approx(2.0 * fractional.values + 0.5 * brownian, abs=1e-12)
    assert mixed.meta.kind is ProcessKind.MIXED
    assert mixed.meta.sigma == 2.0
    assert mixed.meta.epsilon == 0.5
    assert mixed.exp()[0] == 1.0


def test_mixed_mvn() -> None:
    grid = make_grid(1.0, 4)
    mixed = simulate_mixed(0.7, SPEC, 1.0, 1.0, grid, 2, "mvn", truncation=10.0)
    assert mixed.meta.scheme is SchemeTag.TRUNCATED_MVN
    assert mixed.meta.truncation == 10.0


@pytest.mark.parametrize(("h", "sigma", "epsilon"), [(0.4, 1.0, 1.0), (0.7, 0.0, 1.0), (0.7, 1.0, -1.0)])
def test_mixed_invalid(h: float, sigma: float, epsilon: float) -> None:
    with pytest.raises(DomainError):
        simulate_mixed(h, SPEC, sigma, epsilon, make_grid(1.0, 4), 0)


def test_ensemble_independent_of_workers() -> None:
    grid = make_grid(1.0, 4)

    def last(seed: int) -> float:
        return float(simulate_flpmg_jumpsum(0.7, SPEC, grid, seed).values[-1])

    assert simulate_ensemble(last, 40, 99, workers=1) == simulate_ensemble(last, 40, 99, workers=4)


def test_ensemble_uses_environment(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("FRALE_THREADS", "3")
    assert simulate_ensemble(lambda s: s, 5, 1) == [derive_seed(1, i) for i in range(5)]


@pytest.mark.parametrize("size", [0, 2.5])
def test_ensemble_size(size: float) -> None:
    with pytest.raises(DomainError, match="size"):
        simulate_ensemble(lambda s: s, size, 0)  # type: ignore[arg-type]


def test_ensemble_values_needs_one_grid() -> None:
    first = simulate_flpmg_jumpsum(0.7, SPEC, make_grid(1.0, 4), 0)
    second = simulate_flpmg_jumpsum(0.7, SPEC, make_grid(1.0, 8), 0)
    with pytest.raises(DomainError, match="one grid"):
        ensemble_values([first, second])
    with pytest.raises(DomainError, match="empty"):
        ensemble_values([])
