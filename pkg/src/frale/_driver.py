from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Iterable, NamedTuple, Union

import numpy as np

from ._error import DegenerateMeasureError, DomainError

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

_LOGGER = logging.getLogger("frale")

#: largest accepted jump mean :math:`|\sum r_i x_i|` of a Lévy measure
MEAN_TOLERANCE = 1e-12
_MAX_SEED = 2**64 - 1
# stream keys below a path seed
_FUTURE_STREAM = 0
_PAST_STREAM = 1
_BROWNIAN_STREAM = 2
_TIMES = 0
_SIZES = 1


class LevyAtom(NamedTuple):
    """One atom ``rate * delta_x`` of a Lévy measure."""

    x: float
    rate: float


AtomLike = Union[LevyAtom, "tuple[float, float]"]


class MomentFunctionals(NamedTuple):
    """Moments :math:`m_k = \\int x^k \\nu(dx)` of a Lévy measure."""

    m2: float
    m3: float
    m4: float


def _as_atoms(atoms: Iterable[AtomLike]) -> tuple[LevyAtom, ...]:
    result = []
    for x, rate in atoms:
        x, rate = float(x), float(rate)
        if x == 0.0 or not math.isfinite(x):
            raise DomainError("x", x, "jump sizes must be finite and nonzero")
        if not rate > 0.0 or not math.isfinite(rate):
            raise DegenerateMeasureError(f"atom at {x} has rate {rate}, rates must be positive")
        result.append(LevyAtom(x, rate))
    if not result:
        msg = "no atoms"
        raise DegenerateMeasureError(msg)
    return tuple(result)


@dataclass(frozen=True)
class LevyMeasureSpec:
    """
    A finite atomic Lévy measure :math:`\\nu = \\sum_i r_i \\delta_{x_i}` with zero jump mean.

    The driver it describes is the compound Poisson process with intensity :math:`\\lambda = \\sum_i r_i` and jump law
    :math:`P(J = x_i) = r_i / \\lambda`, without Gaussian part or drift.
    """

    atoms: tuple[LevyAtom, ...]

    def __post_init__(self) -> None:
        atoms = _as_atoms(self.atoms)
        object.__setattr__(self, "atoms", atoms)
        mean = math.fsum(a.rate * a.x for a in atoms)
        if abs(mean) > MEAN_TOLERANCE:
            raise DomainError("atoms", mean, "the jump mean must vanish, see LevyMeasureSpec.centered")

    @classmethod
    def centered(cls, atoms: Iterable[AtomLike]) -> LevyMeasureSpec:
        """
        Build a zero-mean measure by shifting every jump size by the mean jump.

        :raises DegenerateMeasureError: if a shifted jump size collapses to zero
        """
        atoms = _as_atoms(atoms)
        total = math.fsum(a.rate for a in atoms)
        mean = math.fsum(a.rate * a.x for a in atoms)
        if abs(mean) <= MEAN_TOLERANCE:
            return cls(atoms)
        shift = mean / total
        shifted = [LevyAtom(a.x - shift, a.rate) for a in atoms]
        if any(abs(a.x) <= MEAN_TOLERANCE * max(1.0, abs(shift)) for a in shifted):
            msg = f"centering by {shift} moves a jump size onto zero"
            raise DegenerateMeasureError(msg)
        _LOGGER.debug("Centered Lévy measure by shifting jump sizes by %s", -shift)
        residual = math.fsum(a.rate * a.x for a in shifted)
        if abs(residual) > MEAN_TOLERANCE:
            # the largest rate absorbs the rounding residue
            i = max(range(len(shifted)), key=lambda j: shifted[j].rate)
            shifted[i] = LevyAtom(shifted[i].x - residual / shifted[i].rate, shifted[i].rate)
        return cls(tuple(shifted))

    @classmethod
    def rademacher(cls, rate: float = 1.0) -> LevyMeasureSpec:
        """:return: :math:`(\\lambda/2)(\\delta_1 + \\delta_{-1})`, unit jumps of random sign at intensity ``rate``"""
        return cls((LevyAtom(1.0, rate / 2.0), LevyAtom(-1.0, rate / 2.0)))

    @property
    def total_rate(self) -> float:
        """:return: the jump intensity :math:`\\lambda`"""
        return math.fsum(a.rate for a in self.atoms)

    def moment(self, k: int) -> float:
        """:return: :math:`m_k = \\sum_i r_i x_i^k`"""
        return math.fsum(a.rate * a.x**k for a in self.atoms)

    def moments(self) -> MomentFunctionals:
        """:return: the second to fourth moment functionals"""
        return MomentFunctionals(self.moment(2), self.moment(3), self.moment(4))

    def to_dict(self) -> dict[str, Any]:
        return {"atoms": [{"x": a.x, "rate": a.rate} for a in self.atoms]}

    @classmethod
    def from_dict(cls, data: dict[str, Any], *, center: bool = False) -> LevyMeasureSpec:
        try:
            atoms = [(item["x"], item["rate"]) for item in data["atoms"]]
        except (KeyError, TypeError) as exception:
            raise DomainError("atoms", data, 'expected {"atoms": [{"x": ..., "rate": ...}, ...]}') from exception
        return cls.centered(atoms) if center else cls(tuple(atoms))  # type: ignore[arg-type]

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str, *, center: bool = False) -> LevyMeasureSpec:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exception:
            raise DomainError("spec", text[:40], f"not valid JSON ({exception.msg})") from exception
        return cls.from_dict(data, center=center)

    def digest(self) -> str:
        """:return: a short stable hash identifying the measure in output metadata"""
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()[:16]


def _check_seed(seed: int) -> int:
    if int(seed) != seed or not 0 <= seed <= _MAX_SEED:
        raise DomainError("seed", seed, "must be an integer in [0, 2**64)")
    return int(seed)


def make_generator(seed: int, *keys: int) -> np.random.Generator:
    """
    Counter-based generator for a seed and an optional stream key path.

    :return: a Philox generator keyed by ``SeedSequence([seed, *keys])``
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([_check_seed(seed), *keys])))


def derive_seed(master: int, index: int) -> int:
    """:return: the 64-bit seed of path ``index`` of an ensemble, a pure function of ``(master, index)``"""
    state = np.random.SeedSequence([_check_seed(master), int(index)]).generate_state(1, dtype=np.uint64)
    return int(state[0])


@dataclass(frozen=True, eq=False)
class DriverPath:
    """
    One realized compound Poisson path, possibly two-sided.

    Jumps sit at strictly increasing ``times`` in ``(start, horizon]``; the path is right-continuous and pinned at
    :math:`L_0 = 0`, so :math:`L_t = \\sum_{0 < s \\le t} \\Delta L_s` for ``t >= 0`` and
    :math:`L_t = -\\sum_{t < s \\le 0} \\Delta L_s` for ``t < 0``.
    """

    times: NDArray[np.float64]
    sizes: NDArray[np.float64]
    horizon: float
    seed: int
    spec: LevyMeasureSpec
    start: float = 0.0
    _cumulative: NDArray[np.float64] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=np.float64)
        sizes = np.asarray(self.sizes, dtype=np.float64)
        if times.shape != sizes.shape or times.ndim != 1:
            raise DomainError("sizes", sizes.shape, f"must match the jump times {times.shape}")
        if times.size and (np.any(np.diff(times) <= 0.0) or times[0] <= self.start or times[-1] > self.horizon):
            raise DomainError("times", times, f"must increase strictly inside ({self.start}, {self.horizon}]")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "_cumulative", np.concatenate(([0.0], np.cumsum(sizes))))

    @property
    def count(self) -> int:
        """:return: the number of jumps"""
        return int(self.times.size)

    def _through(self, t: ArrayLike) -> Any:  # noqa: ANN401
        return self._cumulative[np.searchsorted(self.times, t, side="right")]

    def increment(self, a: ArrayLike, b: ArrayLike) -> Any:  # noqa: ANN401
        """:return: :math:`L_b - L_a`, the sum of the jumps in ``(a, b]``"""
        return self._through(b) - self._through(a)

    def value_at(self, t: ArrayLike) -> Any:  # noqa: ANN401
        """:return: :math:`L_t`"""
        return self.increment(0.0, t)

    def jump_count(self, a: float, b: float) -> int:
        """:return: the number of jumps in ``(a, b]``"""
        return int(np.searchsorted(self.times, b, side="right") - np.searchsorted(self.times, a, side="right"))

    def restrict(self, a: float, b: float) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """:return: jump times and sizes in ``(a, b]``"""
        lo, hi = np.searchsorted(self.times, [a, b], side="right")
        return self.times[lo:hi], self.sizes[lo:hi]


def _arrival_times(rng: np.random.Generator, rate: float, horizon: float) -> NDArray[np.float64]:
    # exponential gaps drawn in chunks: the result on (0, T] is a prefix of the one on (0, 2T]
    mean = rate * horizon
    chunk = max(16, int(mean + 5.0 * math.sqrt(mean) + 16))
    times: list[NDArray[np.float64]] = []
    last = 0.0
    while True:
        arrivals = last + np.cumsum(rng.exponential(1.0 / rate, chunk))
        inside = arrivals[arrivals <= horizon]
        times.append(inside)
        if inside.size < chunk:
            return np.concatenate(times)
        last = float(arrivals[-1])


def _jump_sizes(rng: np.random.Generator, spec: LevyMeasureSpec, count: int) -> NDArray[np.float64]:
    xs = np.array([a.x for a in spec.atoms])
    cdf = np.cumsum([a.rate for a in spec.atoms])
    cdf /= cdf[-1]
    index = np.searchsorted(cdf, rng.random(count), side="right")
    return xs[np.minimum(index, xs.size - 1)]


def _one_sided(spec: LevyMeasureSpec, horizon: float, seed: int, stream: int) -> tuple[Any, Any]:
    times = _arrival_times(make_generator(seed, stream, _TIMES), spec.total_rate, horizon)
    return times, _jump_sizes(make_generator(seed, stream, _SIZES), spec, times.size)


def _check_positive(name: str, value: float) -> float:
    value = float(value)
    if not value > 0.0 or not math.isfinite(value):
        raise DomainError(name, value, "must be positive and finite")
    return value


def sample_compound_poisson(spec: LevyMeasureSpec, horizon: float, seed: int) -> DriverPath:
    """
    Sample a compound Poisson path on ``(0, horizon]``.

    Arrival gaps are exponential with mean :math:`1/\\lambda`, jump sizes are i.i.d. with
    :math:`P(J = x_i) = r_i/\\lambda`, each from its own Philox stream. A longer horizon with the same seed extends the
    path: the jumps up to the shorter horizon coincide.

    :param spec: the Lévy measure
    :param horizon: ``T > 0``
    :param seed: the path seed

    """
    horizon = _check_positive("T", horizon)
    times, sizes = _one_sided(spec, horizon, _check_seed(seed), _FUTURE_STREAM)
    _LOGGER.debug("Sampled %d jumps on (0, %s] with seed %s", times.size, horizon, seed)
    return DriverPath(times, sizes, horizon, seed, spec)


def sample_two_sided(spec: LevyMeasureSpec, horizon: float, seed: int, *, past: float | None = None) -> DriverPath:
    """
    Sample a two-sided path on ``(-past, horizon]`` from two independent copies.

    The second copy's jump at :math:`\\tau'` becomes a jump at :math:`-\\tau'` of the same size, which realizes
    :math:`L_t = -L^{(2)}_{(-t)-}` for ``t < 0`` with right-continuous paths. The branch on ``t > 0`` equals
    :func:`sample_compound_poisson` with the same seed.

    :param past: how far back to sample, defaults to ``horizon``

    """
    horizon = _check_positive("T", horizon)
    past = horizon if past is None else _check_positive("past", past)
    seed = _check_seed(seed)
    future_times, future_sizes = _one_sided(spec, horizon, seed, _FUTURE_STREAM)
    past_times, past_sizes = _one_sided(spec, past, seed, _PAST_STREAM)
    past_times = past_times[past_times < past]  # keep the branch open at -past
    times = np.concatenate((-past_times[::-1], future_times))
    sizes = np.concatenate((past_sizes[: past_times.size][::-1], future_sizes))
    _LOGGER.debug("Sampled %d jumps on (%s, %s] with seed %s", times.size, -past, horizon, seed)
    return DriverPath(times, sizes, horizon, seed, spec, start=-past)


@dataclass(frozen=True, eq=False)
class BrownianIncrements:
    """Independent centered Gaussian increments of a Brownian motion over the cells of a grid."""

    grid: NDArray[np.float64]
    increments: NDArray[np.float64]
    seed: int

    def values(self) -> NDArray[np.float64]:
        """:return: :math:`W` on the grid, starting at zero"""
        return np.concatenate(([0.0], np.cumsum(self.increments)))


def _check_grid(grid: ArrayLike, *, strict: bool) -> NDArray[np.float64]:
    array = np.asarray(grid, dtype=np.float64)
    if array.ndim != 1 or array.size < 2 or not np.all(np.isfinite(array)):  # noqa: PLR2004
        raise DomainError("grid", grid, "must be a finite one-dimensional array of at least two times")
    steps = np.diff(array)
    if np.any(steps <= 0.0) if strict else np.any(steps < 0.0):
        raise DomainError("grid", grid, "times must increase strictly" if strict else "times must not decrease")
    return array


def sample_brownian_increments(grid: ArrayLike, seed: int) -> BrownianIncrements:
    """:return: Brownian increments with variance equal to the cell lengths of ``grid`` (zero on empty cells)"""
    array = _check_grid(grid, strict=False)
    rng = make_generator(seed, _BROWNIAN_STREAM)
    increments = rng.standard_normal(array.size - 1) * np.sqrt(np.diff(array))
    return BrownianIncrements(array, increments, int(seed))


def psi(spec: LevyMeasureSpec, u: ArrayLike) -> Any:  # noqa: ANN401
    """
    Characteristic exponent :math:`\\Psi(u) = \\sum_i r_i (e^{iux_i} - 1 - iux_i)`, so that
    :math:`E e^{iuL_t} = e^{t\\Psi(u)}`.

    :return: a complex number for scalar ``u``, a complex array otherwise
    """
    u_arr = np.asarray(u, dtype=np.float64)
    arg = np.multiply.outer(u_arr, [a.x for a in spec.atoms])
    rates = np.array([a.rate for a in spec.atoms])
    # cos(z) - 1 = -2 sin^2(z/2) keeps small arguments accurate
    real = (-2.0 * np.sin(arg / 2.0) ** 2) @ rates
    imag = (np.sin(arg) - arg) @ rates
    value = real + 1j * imag
    return complex(value) if value.ndim == 0 else value


class TruncationResult(NamedTuple):
    """The measure left after removing small jumps, with the L² size of what was removed."""

    spec: LevyMeasureSpec
    #: :math:`\\int_{|x| < \\epsilon} x^2 \\nu(dx)`
    discarded_m2: float


def truncate_levy_measure(spec: LevyMeasureSpec | Iterable[AtomLike], epsilon: float) -> TruncationResult:
    """
    Drop the atoms with :math:`|x| < \\epsilon` and re-center the rest.

    :param spec: a measure, or a raw atom list that need not be centered (e.g. a discretized infinite-activity measure)
    :param epsilon: the cut, positive
    :raises DegenerateMeasureError: if no atom survives

    """
    epsilon = _check_positive("epsilon", epsilon)
    atoms = spec.atoms if isinstance(spec, LevyMeasureSpec) else _as_atoms(spec)
    kept = [a for a in atoms if abs(a.x) >= epsilon]
    discarded = math.fsum(a.rate * a.x * a.x for a in atoms if abs(a.x) < epsilon)
    if not kept:
        msg = f"every jump is smaller than epsilon={epsilon}"
        raise DegenerateMeasureError(msg)
    if isinstance(spec, LevyMeasureSpec) and len(kept) == len(atoms):
        return TruncationResult(spec, 0.0)
    _LOGGER.debug("Truncated %d atoms below %s, discarded m2 %s", len(atoms) - len(kept), epsilon, discarded)
    return TruncationResult(LevyMeasureSpec.centered(kept), discarded)


__all__ = [
    "MEAN_TOLERANCE",
    "AtomLike",
    "BrownianIncrements",
    "DriverPath",
    "LevyAtom",
    "LevyMeasureSpec",
    "MomentFunctionals",
    "TruncationResult",
    "derive_seed",
    "make_generator",
    "psi",
    "sample_brownian_increments",
    "sample_compound_poisson",
    "sample_two_sided",
    "truncate_levy_measure",
]
