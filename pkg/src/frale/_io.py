from __future__ import annotations

import json
import logging
import os
import stat
from errno import EACCES, EISDIR, ENOTDIR
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np
from filelock import FileLock

from ._driver import LevyMeasureSpec
from ._error import DomainError
from ._simulate import PathMeta, ProcessKind, SamplePath, SchemeTag
from ._wiener import StepFunction

if TYPE_CHECKING:
    from ._analyze import Report

_LOGGER = logging.getLogger("frale")

#: seconds to wait for another process holding an output file
LOCK_TIMEOUT = 30.0
_META_PREFIX = "# "


def check_writable_target(filename: Path | str) -> Path:
    """
    Fail before a long computation if ``filename`` could not take its result.

    :raises IsADirectoryError: if the target is a directory
    :raises NotADirectoryError: if a file sits where one of its parent directories would be created
    :raises PermissionError: if the target exists without the owner's write bit
    :return: the target as a path

    """
    path = Path(filename)
    if path.is_dir():
        raise IsADirectoryError(EISDIR, os.strerror(EISDIR), str(path))
    if path.exists():
        if not path.stat().st_mode & stat.S_IWUSR:
            raise PermissionError(EACCES, os.strerror(EACCES), str(path))
        return path
    ancestor = next(parent for parent in path.parents if parent.exists())
    if not ancestor.is_dir():
        raise NotADirectoryError(ENOTDIR, os.strerror(ENOTDIR), str(ancestor))
    return path


def write_locked(filename: Path | str, text: str, *, timeout: float = LOCK_TIMEOUT) -> Path:
    """
    Write ``text`` to ``filename`` while holding ``<filename>.lock``.

    Missing parent directories are created. Concurrent runs targeting the same file write one after the other; each
    write replaces the file atomically.

    :return: the written path

    """
    path = check_writable_target(filename)
    path.parent.mkdir(parents=True, exist_ok=True)
    with FileLock(f"{path}.lock", timeout=timeout):
        partial = path.with_name(f".{path.name}.partial")
        partial.write_text(text, encoding="utf-8", newline="\n")
        partial.replace(path)
    _LOGGER.debug("Wrote %s", path)
    return path


def _format(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def _meta_line(key: str, value: object) -> str:
    text = value if isinstance(value, str) else repr(value)
    return f"{_META_PREFIX}{key}={text}"


def path_to_csv(path: SamplePath) -> str:
    """:return: the path as ``t,value`` CSV, metadata in ``#`` lines ahead of the header"""
    meta = path.meta
    lines = [
        _meta_line("kind", meta.kind.value),
        _meta_line("H", meta.hurst),
        _meta_line("seed", meta.seed),
        _meta_line("scheme", meta.scheme.value),
    ]
    optional = {
        "spec": meta.spec_digest,
        "S_trunc": meta.truncation,
        "S_trunc_capped": meta.truncation_capped or None,
        "shift": meta.shift,
        "sigma": meta.sigma,
        "epsilon": meta.epsilon,
    }
    lines.extend(_meta_line(key, value) for key, value in optional.items() if value is not None)
    lines.append("t,value")
    lines.extend(f"{t!r},{v!r}" for t, v in zip(path.grid.tolist(), path.values.tolist()))
    return "\n".join(lines) + "\n"


def _parse_meta(lines: list[str]) -> dict[str, str]:
    meta = {}
    for line in lines:
        key, _, value = line[len(_META_PREFIX) :].partition("=")
        meta[key.strip()] = value.strip()
    return meta


def path_from_csv(text: str) -> SamplePath:
    """:return: the path written by :func:`path_to_csv`"""
    lines = text.splitlines()
    comments = [line for line in lines if line.startswith("#")]
    body = [line for line in lines if line and not line.startswith("#")]
    if not body or body[0] != "t,value":
        raise DomainError("csv", body[:1], "expected the header t,value")
    raw = _parse_meta(comments)
    try:
        data = np.array([[float(cell) for cell in row.split(",")] for row in body[1:]])
        meta = PathMeta(
            ProcessKind(raw["kind"]),
            float(raw["H"]),
            SchemeTag(raw["scheme"]),
            int(raw["seed"]),
            raw.get("spec"),
            float(raw["S_trunc"]) if "S_trunc" in raw else None,
            "S_trunc_capped" in raw,
            float(raw["shift"]) if "shift" in raw else None,
            float(raw["sigma"]) if "sigma" in raw else None,
            float(raw["epsilon"]) if "epsilon" in raw else None,
        )
    except (KeyError, ValueError) as exception:
        raise DomainError("csv", comments, f"malformed path metadata ({exception})") from exception
    return SamplePath(data[:, 0], data[:, 1], meta)


def columns_to_csv(header: tuple[str, ...], rows: list[tuple[float, ...]], meta: dict[str, Any] | None = None) -> str:
    """:return: generic numeric CSV with optional ``#`` metadata lines"""
    lines = [_meta_line(key, value) for key, value in (meta or {}).items()]
    lines.append(",".join(header))
    lines.extend(",".join(_format(cell) for cell in row) for row in rows)
    return "\n".join(lines) + "\n"


def csv_to_svg(text: str, *, width: int = 640, height: int = 360, margin: int = 24) -> str:
    """
    A minimal polyline plot of the first two numeric columns of a CSV.

    A pure function of the CSV text: ``#`` lines give the title, the first non-comment line is the header.
    """
    lines = text.splitlines()
    title = "; ".join(line[len(_META_PREFIX) :] for line in lines if line.startswith("#"))
    body = [line for line in lines if line and not line.startswith("#")]
    points = []
    for row in body[1:]:
        cells = row.split(",")
        if len(cells) >= 2 and cells[0] and cells[1]:  # noqa: PLR2004
            points.append((float(cells[0]), float(cells[1])))
    if not points:
        raise DomainError("csv", body[:1], "has no numeric rows to plot")
    xs, ys = zip(*points)
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    x_span = (x_hi - x_lo) or 1.0
    y_span = (y_hi - y_lo) or 1.0
    scale_x = (width - 2 * margin) / x_span
    scale_y = (height - 2 * margin) / y_span
    coords = " ".join(
        f"{margin + (x - x_lo) * scale_x:.2f},{height - margin - (y - y_lo) * scale_y:.2f}" for x, y in points
    )
    escaped = title.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">\n'
        f"<title>{escaped}</title>\n"
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>\n'
        f'<polyline fill="none" stroke="black" stroke-width="1" points="{coords}"/>\n'
        "</svg>\n"
    )


def report_to_csv(report: Report) -> str:
    """:return: ``quantity,analytic,empirical,stderr`` rows, a divergent analytic side left empty"""
    lines = ["quantity,analytic,empirical,stderr"]
    lines.extend(
        f"{row.quantity},{_format(row.analytic)},{_format(row.empirical)},{_format(row.stderr)}"
        for row in report.rows()
    )
    return "\n".join(lines) + "\n"


def report_verdict(name: str, report: Report, threshold: float) -> dict[str, Any]:
    """:return: the JSON-ready verdict of one check"""
    rows = report.rows()
    scores = [row.z_score for row in rows if row.z_score is not None]
    return {
        "check": name,
        "verdict": report.verdict(threshold).value,
        "max_z": max(scores) if scores else None,
        "rows": [row._asdict() for row in rows],
    }


def to_json(data: Any) -> str:  # noqa: ANN401
    def default(value: Any) -> Any:  # noqa: ANN401
        if isinstance(value, (np.floating, np.integer)):
            return value.item()
        if isinstance(value, np.ndarray):
            return value.tolist()
        msg = f"cannot serialize {type(value).__name__}"
        raise TypeError(msg)

    # infinities become null, JSON has no representation for them
    return json.dumps(_finite(data), indent=2, sort_keys=True, default=default) + "\n"


def _finite(data: Any) -> Any:  # noqa: ANN401
    if isinstance(data, float):
        return data if np.isfinite(data) else None
    if isinstance(data, dict):
        return {key: _finite(value) for key, value in data.items()}
    if isinstance(data, (list, tuple)):
        return [_finite(value) for value in data]
    return data


def read_levy_spec(filename: Path | str, *, center: bool = False) -> LevyMeasureSpec:
    """:return: the measure stored as ``{"atoms": [{"x": ..., "rate": ...}, ...]}``"""
    return LevyMeasureSpec.from_json(Path(filename).read_text(encoding="utf-8"), center=center)


def read_step_function(filename: Path | str) -> StepFunction:
    """:return: the step function stored as ``[{"upto": ..., "level": ...}, ...]``"""
    try:
        data = json.loads(Path(filename).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exception:
        raise DomainError("steps", str(filename), f"not valid JSON ({exception.msg})") from exception
    return StepFunction.from_pairs(data)


__all__ = [
    "LOCK_TIMEOUT",
    "check_writable_target",
    "columns_to_csv",
    "csv_to_svg",
    "path_from_csv",
    "path_to_csv",
    "read_levy_spec",
    "read_step_function",
    "report_to_csv",
    "report_verdict",
    "to_json",
    "write_locked",
]
