""" Readers and writers: point CSVs, JSON metadata, YAML/JSON descriptors, Laurent-form masks and SVG scatters. """

import csv
import json
import os
import re
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterator, Optional, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy  # noqa: E402
import yaml  # noqa: E402
from pydantic import ValidationError  # noqa: E402

from ..utils import get_logger  # noqa: E402
from .catalog import resolve  # noqa: E402
from .function_systems import periodic_schedule, constant_schedule  # noqa: E402
from .schemas import (  # noqa: E402
    AffineMap,
    FormatError,
    FunctionSystem,
    LiftMatrix,
    Mask,
    PointSet,
    ResolvedScheme,
)
from .sfs_bridge import build_p_matrix, lift_from_matrix  # noqa: E402

logger = get_logger(__name__)

matplotlib.rcParams["svg.hashsalt"] = "sfs"

_NUMBER = r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_TERM = re.compile(
    rf"""\s*(?P<sign>[+-])?\s*
    (?P<coef>{_NUMBER}(?:\s*/\s*{_NUMBER})?)?
    \s*(?P<var>\*?\s*z(?:\s*(?:\^|\*\*)\s*(?P<exp>\(\s*[+-]?\s*\d+\s*\)|[+-]?\s*\d+))?)?\s*""",
    re.VERBOSE,
)


@contextmanager
def _atomic_target(path: Path) -> Iterator[Any]:
    path.parent.mkdir(parents=True, exist_ok=True)
    handle = tempfile.NamedTemporaryFile(
        "w", dir=path.parent, prefix=f".{path.name}.", suffix=".tmp", delete=False, newline=""
    )
    try:
        with handle:
            yield handle
        os.replace(handle.name, path)
    except BaseException:
        os.unlink(handle.name)
        raise


def read_points_csv(path: Union[str, Path]) -> numpy.ndarray:
    """Read points from a CSV file with one point per row and no header.
    path (Union[str, Path]): CSV file.
    RETURNS (numpy.ndarray): (N, m) array.
    """
    rows = []
    with open(path, "r", newline="") as file:
        for line_no, row in enumerate(csv.reader(file), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                rows.append([float(cell) for cell in row])
            except ValueError as err:
                raise FormatError(f"{path}:{line_no}: non-numeric entry ({err}).") from err
            if len(rows[-1]) != len(rows[0]):
                raise FormatError(
                    f"{path}:{line_no}: ragged row with {len(rows[-1])} columns, expected {len(rows[0])}."
                )
    if not rows:
        raise FormatError(f"{path}: no points.")
    points = numpy.array(rows)
    if not numpy.all(numpy.isfinite(points)):
        raise FormatError(f"{path}: non-finite coordinates.")
    return points


def write_points_csv(path: Union[str, Path], points: Union[PointSet, numpy.ndarray]) -> None:
    """Write points with 17 significant digits, atomically.
    path (Union[str, Path]): Target file.
    points (Union[PointSet, numpy.ndarray]): Points as rows.
    """
    array = points.points if isinstance(points, PointSet) else numpy.atleast_2d(points)
    with _atomic_target(Path(path)) as file:
        for row in array:
            file.write(",".join(f"{value:.17g}" for value in row) + "\n")
    logger.info("Wrote %d points to %s.", len(array), path)


def write_json(path: Union[str, Path], data: Any) -> None:
    """Write JSON with sorted keys, atomically.
    path (Union[str, Path]): Target file.
    data (Any): JSON-serializable data.
    """
    with _atomic_target(Path(path)) as file:
        json.dump(data, file, indent=2, sort_keys=True)
        file.write("\n")
    logger.info("Wrote %s.", path)


def render_svg(points: Union[PointSet, numpy.ndarray], path: Union[str, Path]) -> None:
    """Scatter the first two coordinates into an 800 x 800 SVG with a 5% margin around the bounding box.
    points (Union[PointSet, numpy.ndarray]): Points; one-dimensional points are drawn on y = 0.
    path (Union[str, Path]): Target file.
    """
    array = points.points if isinstance(points, PointSet) else numpy.atleast_2d(points)
    x = array[:, 0]
    y = array[:, 1] if array.shape[1] > 1 else numpy.zeros_like(x)
    span = max(float(numpy.ptp(x)), float(numpy.ptp(y))) or 1.0
    margin = 0.05 * span
    cx, cy = (x.min() + x.max()) / 2, (y.min() + y.max()) / 2

    fig, ax = plt.subplots(figsize=(8, 8), dpi=100)
    ax.scatter(x, y, s=1, marker=".", linewidths=0, color="black")
    ax.set_xlim(cx - span / 2 - margin, cx + span / 2 + margin)
    ax.set_ylim(cy - span / 2 - margin, cy + span / 2 + margin)
    ax.set_aspect("equal")
    ax.axis("off")
    fig.subplots_adjust(left=0, right=1, bottom=0, top=1)
    with _atomic_target(Path(path)) as file:
        fig.savefig(file, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.info("Wrote %s.", path)


def read_mapping(path: Union[str, Path]) -> Any:
    """Load a YAML or JSON file.
    path (Union[str, Path]): File.
    RETURNS (Any): Parsed content.
    """
    try:
        with open(path, "r") as file:
            return yaml.safe_load(file)
    except yaml.YAMLError as err:
        raise FormatError(f"{path}: {err}") from err


def _number(text: str) -> float:
    numerator, _, denominator = text.partition("/")
    value = float(numerator)
    return value / float(denominator) if denominator else value


def parse_laurent(text: str) -> Mask:
    """Parse a mask written as a Laurent polynomial, e.g. "a(z) = 1/8 + 1/2*z + 3/4 z^2 + 1/2 z^3 + 1/8 z^4".
    text (str): Polynomial with integer exponents, optionally prefixed by "a(z) =".
    RETURNS (Mask): Mask with offset at the lowest exponent.
    """
    body = text.split("=", 1)[1] if "=" in text else text
    body = body.strip()
    terms: Dict[int, float] = {}
    pos = 0
    while pos < len(body):
        match = _TERM.match(body, pos)
        if (
            match is None
            or match.end() == pos
            or (match.group("coef") is None and match.group("var") is None)
            or (pos > 0 and match.group("sign") is None)
        ):
            raise FormatError(f"Cannot parse Laurent polynomial near '{body[pos:]}'.")
        sign = -1.0 if match.group("sign") == "-" else 1.0
        coef = _number(re.sub(r"\s+", "", match.group("coef"))) if match.group("coef") else 1.0
        exponent = 0
        if match.group("var"):
            raw = match.group("exp")
            exponent = int(re.sub(r"[\s()]", "", raw)) if raw else 1
        terms[exponent] = terms.get(exponent, 0.0) + sign * coef
        pos = match.end()

    terms = {e: c for e, c in terms.items() if c != 0.0}
    if not terms:
        raise FormatError(f"Laurent polynomial '{text}' has no nonzero terms.")
    lo, hi = min(terms), max(terms)
    return Mask(coeffs=[terms.get(e, 0.0) for e in range(lo, hi + 1)], offset=lo)


def mask_from_descriptor(descriptor: Any) -> Mask:
    """Mask from {"offset": int, "coeffs": [...]}, {"laurent": "..."} or a bare Laurent string.
    descriptor (Any): Parsed descriptor.
    RETURNS (Mask): Mask.
    """
    if isinstance(descriptor, str):
        return parse_laurent(descriptor)
    if not isinstance(descriptor, dict):
        raise FormatError("A mask descriptor must be a mapping or a Laurent polynomial.")
    if "laurent" in descriptor:
        return parse_laurent(str(descriptor["laurent"]))
    try:
        return Mask(coeffs=descriptor["coeffs"], offset=int(descriptor.get("offset", 0)))
    except (KeyError, TypeError, ValidationError) as err:
        raise FormatError(f"Invalid mask descriptor: {err}") from err


def function_system_from_descriptor(descriptor: Dict[str, Any]) -> FunctionSystem:
    """Function system from {"dim": m, "maps": [{"A": row-major, "b": [...]}, ...], "label": ...}.
    descriptor (Dict[str, Any]): Parsed descriptor.
    RETURNS (FunctionSystem): The system.
    """
    try:
        dim = int(descriptor["dim"])
        maps = [
            AffineMap(A=numpy.asarray(item["A"], dtype=float).reshape(dim, dim), b=item["b"])
            for item in descriptor["maps"]
        ]
        return FunctionSystem(maps=maps, label=descriptor.get("label"))
    except (KeyError, TypeError, ValueError) as err:
        raise FormatError(f"Invalid function system descriptor: {err}") from err


def lift_from_descriptor(descriptor: Dict[str, Any]) -> LiftMatrix:
    """Lift from {"n": n, "m": m, "p0": [[...]], "fill": "h-pattern"} or {"matrix": [[...]], "m": m}.
    descriptor (Dict[str, Any]): Parsed descriptor.
    RETURNS (LiftMatrix): The lift.
    """
    if not isinstance(descriptor, dict):
        raise FormatError("A lift descriptor must be a mapping.")
    try:
        if "matrix" in descriptor:
            return lift_from_matrix(descriptor["matrix"], int(descriptor.get("m", 0)))
        fill = descriptor.get("fill", "h-pattern")
        if fill != "h-pattern":
            raise FormatError(f"Unsupported fill '{fill}', only 'h-pattern' is known.")
        L = build_p_matrix(descriptor["p0"])
    except (KeyError, TypeError, ValidationError) as err:
        raise FormatError(f"Invalid lift descriptor: {err}") from err
    for key, value in (("n", L.n), ("m", L.m)):
        if key in descriptor and int(descriptor[key]) != value:
            raise FormatError(f"Lift descriptor declares {key}={descriptor[key]} but p0 gives {value}.")
    return L


def scheme_from_descriptor(
    descriptor: Dict[str, Any], lift_matrix: Optional[LiftMatrix] = None
) -> ResolvedScheme:
    """Schedule from {"kind": "constant", "system": ...}, {"kind": "periodic", "systems": [...],
    "block_lengths": [...]} or {"kind": "catalog", "name": ..., "params": {...}, "seed": ...}. Constant and periodic
    schedules start from the origin unless an "initial" point list is given.
    descriptor (Dict[str, Any]): Parsed descriptor.
    lift_matrix (Optional[LiftMatrix]): Lift replacing the default of catalog masks.
    RETURNS (ResolvedScheme): Resolved schedule.
    """
    if not isinstance(descriptor, dict) or "kind" not in descriptor:
        raise FormatError("A schedule descriptor must be a mapping with a 'kind'.")
    kind = descriptor["kind"]
    if kind == "catalog":
        params = ",".join(f"{k}={v}" for k, v in (descriptor.get("params") or {}).items())
        if descriptor.get("seed") is not None:
            params = ",".join(filter(None, [params, f"seed={int(descriptor['seed'])}"]))
        reference = f"{descriptor['name']}:{params}" if params else str(descriptor["name"])
        return resolve(reference, lift_matrix)

    if kind == "constant":
        system = function_system_from_descriptor(descriptor["system"])
        schedule = constant_schedule(system)
    elif kind == "periodic":
        systems = [function_system_from_descriptor(d) for d in descriptor.get("systems", [])]
        try:
            schedule = periodic_schedule(systems, [int(b) for b in descriptor.get("block_lengths", [])])
        except ValueError as err:
            raise FormatError(f"Invalid periodic schedule: {err}") from err
        system = None
    else:
        raise FormatError(f"Unknown schedule kind '{kind}'.")

    initial = descriptor.get("initial") or [[0.0] * schedule.dim]
    try:
        start = PointSet(points=initial)
    except ValidationError as err:
        raise FormatError(f"Invalid initial set: {err}") from err
    return ResolvedScheme(
        reference=descriptor.get("label") or kind,
        kind="function_system" if kind == "constant" else "schedule",
        schedule=schedule,
        initial=start,
        system=system,
    )
