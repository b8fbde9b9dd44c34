"""Command line surface: ``frale kernel``, ``frale simulate`` and ``frale verify``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Callable, Literal

import numpy as np

from . import __version__
from ._driver import LevyMeasureSpec
from ._error import AccuracyError, DomainError, FraleError
from ._io import (
    check_writable_target,
    columns_to_csv,
    csv_to_svg,
    path_to_csv,
    read_levy_spec,
    to_json,
    write_locked,
)
from ._kernels import (
    KernelKind,
    as_kind,
    g1_g2_bounds,
    kernel_moment,
    mg_kernel,
    mvn_fourth_moment_bound,
    mvn_kernel,
)
from ._simulate import (
    make_grid,
    simulate_fbm_mg,
    simulate_flpmg_ibp,
    simulate_flpmg_jumpsum,
    simulate_flpmvn,
    simulate_mixed,
    simulate_shifted_mg,
)
from ._specfun import as_hurst
from ._verify import DEFAULT_BUDGET, SUITES, VerifyConfig, run_suite

if TYPE_CHECKING:
    from collections.abc import Sequence

    from ._simulate import SamplePath

_LOGGER = logging.getLogger("frale")

Command = Literal["kernel", "simulate", "verify"]
PROCESSES = ("mg", "mvn", "fbm", "mixed", "shifted")
SCHEMES = ("jumpsum", "ibp")
EXIT_PASS, EXIT_FAIL, EXIT_INVALID, EXIT_INCOMPLETE = 0, 1, 2, 3


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated parameters of one command; nothing is computed before this passes."""

    command: Command
    hurst: float | None = None
    kind: KernelKind = KernelKind.MOLCHAN_GOLOSOV
    t: float = 1.0
    points: int = 512
    moment: int | None = None
    g1g2: bool = False
    process: str = "mg"
    spec_path: Path | None = None
    center: bool = False
    horizon: float = 1.0
    grid: int = 512
    seed: int | None = None
    scheme: str = "jumpsum"
    truncation: float | None = None
    shift: float | None = None
    sigma: float = 1.0
    epsilon: float = 1.0
    suites: tuple[str, ...] = ()
    budget: float = DEFAULT_BUDGET
    size: int | None = None
    workers: int | None = None
    output: Path | None = None
    svg: Path | None = None

    def __post_init__(self) -> None:
        if self.hurst is not None:
            as_hurst(self.hurst)
        if self.command == "kernel":
            self._check_kernel()
        elif self.command == "simulate":
            self._check_simulate()
        else:
            self._check_verify()
        for target in (self.output, self.svg):
            if target is not None:
                check_writable_target(target)

    def _check_kernel(self) -> None:
        if self.hurst is None and not self.g1g2:
            raise DomainError("--hurst", None, "is required unless --g1g2 is given")
        if not self.t > 0.0:
            raise DomainError("--t", self.t, "must be positive")
        if self.points < 1:
            raise DomainError("--points", self.points, "must be at least 1")
        if self.moment is not None and self.moment < 2:  # noqa: PLR2004
            raise DomainError("--moment", self.moment, "the moment order must be at least 2")

    def _check_simulate(self) -> None:
        if self.hurst is None:
            raise DomainError("--hurst", None, "is required")
        if self.seed is None:
            raise DomainError("--seed", None, "a master seed is required for stochastic commands")
        if self.process not in PROCESSES:
            raise DomainError("--process", self.process, f"must be one of {', '.join(PROCESSES)}")
        if self.scheme not in SCHEMES:
            raise DomainError("--scheme", self.scheme, f"must be one of {', '.join(SCHEMES)}")
        if self.scheme == "ibp" and self.process != "mg":
            raise DomainError("--scheme", self.scheme, "the pathwise scheme exists for --process mg only")
        if not self.horizon > 0.0:
            raise DomainError("--horizon", self.horizon, "must be positive")
        if self.grid < 1:
            raise DomainError("--grid", self.grid, "must be at least 1")
        if self.truncation is not None and not self.truncation > 0.0:
            raise DomainError("--truncation", self.truncation, "must be positive")
        if self.process == "shifted" and not (self.shift is not None and self.shift > 0.0):
            raise DomainError("--shift", self.shift, "a positive shift is required for --process shifted")
        if self.process == "mixed":
            for flag, value in (("--sigma", self.sigma), ("--epsilon", self.epsilon)):
                if not value > 0.0:
                    raise DomainError(flag, value, "the mixed model needs positive weights")

    def _check_verify(self) -> None:
        if self.seed is None:
            raise DomainError("--seed", None, "a master seed is required for stochastic commands")
        unknown = [name for name in self.suites if name not in SUITES]
        if unknown or not self.suites:
            raise DomainError("--suite", unknown or self.suites, f"must be all or one of {', '.join(SUITES)}")
        # the suite settings validate themselves
        self.verify_config()

    def verify_config(self) -> VerifyConfig:
        return VerifyConfig(int(self.seed or 0), self.budget, self.hurst, self.size, self.workers)

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> ExperimentConfig:
        values = {key: value for key, value in vars(args).items() if key in cls.__dataclass_fields__}
        if "kind" in values:
            values["kind"] = as_kind(values["kind"])
        if "suites" in values:
            chosen = values["suites"] or ["all"]
            values["suites"] = tuple(SUITES) if "all" in chosen else tuple(dict.fromkeys(chosen))
        return cls(**values)


def _emit(config: ExperimentConfig, text: str) -> None:
    if config.output is None:
        sys.stdout.write(text)
    else:
        write_locked(config.output, text)
    if config.svg is not None:
        write_locked(config.svg, csv_to_svg(text))


def _kernel_points(kind: KernelKind, t: float, points: int) -> np.ndarray:
    middles = (np.arange(points) + 0.5) / points
    # the Mandelbrot-Van Ness kernel is shown on (-t, t), half of it before the origin
    return t * middles if kind is KernelKind.MOLCHAN_GOLOSOV else t * (2.0 * middles - 1.0)


def cmd_kernel(config: ExperimentConfig) -> int:
    if config.g1g2:
        rows = []
        for h in np.linspace(0.5, 0.75, config.points + 2)[1:-1].tolist():
            bounds = g1_g2_bounds(h)
            rows.append((h, bounds.difference, bounds.g1, bounds.g2, mvn_fourth_moment_bound(h)))
        _emit(config, columns_to_csv(("H", "difference", "g1", "g2", "mvn_bound"), rows, {"sweep": "g1-g2"}))
        return EXIT_PASS if all(row[1] > 0.0 for row in rows) else EXIT_FAIL
    hp = as_hurst(config.hurst)  # type: ignore[arg-type]
    s = _kernel_points(config.kind, config.t, config.points)
    if config.kind is KernelKind.MOLCHAN_GOLOSOV:
        values = np.array([mg_kernel(hp, config.t, v) for v in s.tolist()])
    else:
        values = np.asarray(mvn_kernel(hp, config.t, s))
    meta: dict[str, object] = {"kind": config.kind.value, "H": hp.h, "t": config.t}
    if config.moment is not None:
        result = kernel_moment(config.kind, hp, config.t, config.moment)
        meta[f"moment_K{config.moment}"] = str(result)
        if config.output is not None:
            sys.stdout.write(f"{result}\n")
    _emit(config, columns_to_csv(("s", "value"), list(zip(s.tolist(), values.tolist())), meta))
    return EXIT_PASS


def _read_spec(config: ExperimentConfig) -> LevyMeasureSpec:
    if config.spec_path is None:
        return LevyMeasureSpec.rademacher(1.0)
    return read_levy_spec(config.spec_path, center=config.center)


def _simulate_path(config: ExperimentConfig) -> SamplePath:
    hp = as_hurst(config.hurst)  # type: ignore[arg-type]
    grid = make_grid(config.horizon, config.grid)
    seed = int(config.seed)  # type: ignore[arg-type]
    if config.process == "fbm":
        return simulate_fbm_mg(hp, grid, seed)
    spec = _read_spec(config)
    if config.process == "mg":
        simulate = simulate_flpmg_ibp if config.scheme == "ibp" else simulate_flpmg_jumpsum
        return simulate(hp, spec, grid, seed)
    if config.process == "mvn":
        return simulate_flpmvn(hp, spec, grid, seed, config.truncation)
    if config.process == "shifted":
        return simulate_shifted_mg(hp, spec, float(config.shift), grid, seed)  # type: ignore[arg-type]
    return simulate_mixed(
        hp, spec, config.sigma, config.epsilon, grid, seed, config.kind, truncation=config.truncation
    )


def cmd_simulate(config: ExperimentConfig) -> int:
    path = _simulate_path(config)
    _emit(config, path_to_csv(path))
    return EXIT_PASS


def cmd_verify(config: ExperimentConfig) -> int:
    settings = config.verify_config()
    results = []
    for name in config.suites:
        result = run_suite(name, settings)
        _LOGGER.info("Suite %s: %s", name, result.to_dict()["verdict"])
        results.append(result)
    payload = results[0].to_dict() if len(results) == 1 else {"suites": [r.to_dict() for r in results]}
    text = to_json(payload)
    if config.output is None:
        sys.stdout.write(text)
    else:
        write_locked(config.output, text)
    if any(r.incomplete for r in results):
        return EXIT_INCOMPLETE
    return EXIT_FAIL if any(r.exit_code == EXIT_FAIL for r in results) else EXIT_PASS


COMMANDS: dict[str, Callable[[ExperimentConfig], int]] = {
    "kernel": cmd_kernel,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="frale",
        description="Fractional Lévy processes by Molchan-Golosov and Mandelbrot-Van Ness transformations.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log debug messages")
    commands = parser.add_subparsers(dest="command", required=True)

    kernel = commands.add_parser("kernel", help="kernel values and moment integrals as CSV")
    kernel.add_argument("--kind", choices=[k.value for k in KernelKind], default="mg")
    kernel.add_argument("--hurst", type=float)
    kernel.add_argument("--t", type=float, default=1.0, help="time argument of the kernel")
    kernel.add_argument("--points", type=int, default=512, help="number of s values or sweep points")
    kernel.add_argument("--moment", type=int, metavar="K", help="also report the integral of the K-th power")
    kernel.add_argument("--g1g2", action="store_true", help="sweep the fourth-moment bounds over 1/2 < H < 3/4")

    simulate = commands.add_parser("simulate", help="one sample path as CSV")
    simulate.add_argument("--process", choices=PROCESSES, default="mg")
    simulate.add_argument("--hurst", type=float, required=True)
    simulate.add_argument("--spec", dest="spec_path", type=Path, help="Lévy measure JSON, Rademacher if omitted")
    simulate.add_argument("--center", action="store_true", help="shift the atoms so that the measure has mean zero")
    simulate.add_argument("--horizon", type=float, default=1.0)
    simulate.add_argument("--grid", type=int, default=512, help="number of grid steps")
    simulate.add_argument("--seed", type=int, required=True)
    simulate.add_argument("--scheme", choices=SCHEMES, default="jumpsum", help="Molchan-Golosov construction")
    simulate.add_argument("--truncation", type=float, help="Mandelbrot-Van Ness truncation horizon")
    simulate.add_argument("--shift", type=float, help="shift of the shifted Molchan-Golosov process")
    kinds = [k.value for k in KernelKind]
    simulate.add_argument("--kind", choices=kinds, default="mg", help="kernel of --process mixed")
    simulate.add_argument("--sigma", type=float, default=1.0, help="weight of the fractional part of --process mixed")
    simulate.add_argument("--epsilon", type=float, default=1.0, help="weight of the Brownian part of --process mixed")

    verify = commands.add_parser("verify", help="run verification suites, JSON verdicts")
    verify.add_argument("--suite", dest="suites", action="append", choices=[*SUITES, "all"])
    verify.add_argument("--budget", type=float, default=DEFAULT_BUDGET, help="seconds per suite")
    verify.add_argument("--seed", type=int, required=True)
    verify.add_argument("--hurst", type=float, help="override the Hurst parameter of the suite")
    verify.add_argument("--size", type=int, help="override the ensemble size of the suite")
    verify.add_argument("--workers", type=int, help="worker threads, FRALE_THREADS or all cores by default")

    for sub in (kernel, simulate, verify):
        sub.add_argument("--output", type=Path, help="write here instead of standard output")
    for sub in (kernel, simulate):
        sub.add_argument("--svg", type=Path, help="also plot the CSV as SVG")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """
    Entry point of the ``frale`` console script.

    :return: 0 pass, 1 failed check or numerical failure, 2 invalid input, 3 verification budget exhausted

    """
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        config = ExperimentConfig.from_args(args)
        return COMMANDS[config.command](config)
    except AccuracyError as exception:
        sys.stderr.write(f"frale: numerical failure: {exception}\n")
        return EXIT_FAIL
    except (FraleError, ValueError, OSError) as exception:
        sys.stderr.write(f"frale: error: {exception}\n")
        return EXIT_INVALID


__all__ = [
    "COMMANDS",
    "ExperimentConfig",
    "cmd_kernel",
    "cmd_simulate",
    "cmd_verify",
    "main",
]
