""" Command-line surface: attractors, trajectories, subdivision and convergence diagnostics. """

from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Union

import prettytable
import typer
from pydantic import ValidationError

from .sfs.catalog import build, diagnose_scheme, get_entry, list_entries, parse_reference, resolve
from .sfs.constants import DEFAULT_EPSILON
from .sfs.formats import (
    lift_from_descriptor,
    mask_from_descriptor,
    parse_laurent,
    read_mapping,
    read_points_csv,
    render_svg,
    scheme_from_descriptor,
    write_json,
    write_points_csv,
)
from .sfs.function_systems import (
    backward_trajectory,
    contraction_factor,
    forward_trajectory,
    ifs_attractor,
    product_diagnostic,
)
from .sfs.metric_sets import hausdorff
from .sfs.schemas import (
    FormatError,
    LiftMatrix,
    Mask,
    NonContractiveError,
    PointSet,
    ResolvedScheme,
    RunConfig,
    SFSError,
)
from .sfs.sfs_bridge import composition_search, project
from .sfs.subdivision import Masks, c0_convergence_estimate, subdivide_levels
from .utils import get_logger

logger = get_logger(__name__)

USAGE_ERROR = 2
NOT_CONVERGED = 3

app = typer.Typer(help="Attractors of function systems and of lifted subdivision schemes.", no_args_is_help=True)
catalog_app = typer.Typer(help="Inspect the built-in catalog.", no_args_is_help=True)
app.add_typer(catalog_app, name="catalog")


@contextmanager
def _usage_errors() -> Iterator[None]:
    """Turn input errors into exit code 2."""
    try:
        yield
    except (SFSError, ValidationError, OSError, ValueError) as err:
        logger.error("%s", err)
        raise typer.Exit(code=USAGE_ERROR)


def _parse_depths(value: Union[None, int, str, List[int]]) -> List[int]:
    if value is None:
        return []
    if isinstance(value, int):
        return [value]
    if isinstance(value, list):
        return value
    try:
        return [int(part) for part in str(value).split(",") if part.strip()]
    except ValueError as err:
        raise FormatError(f"Depths must be comma-separated integers, got '{value}'.") from err


def _load_config(command: str, config: Optional[Path], **flags: Any) -> RunConfig:
    """Merge a YAML/JSON config file with the given flags, flags taking precedence.
    command (str): Command name.
    config (Optional[Path]): Config file whose keys mirror the long flag names.
    flags (Any): Flag values, None for flags that were not given.
    RETURNS (RunConfig): Validated configuration.
    """
    values: Dict[str, Any] = {}
    if config is not None:
        loaded = read_mapping(config)
        if not isinstance(loaded, dict):
            raise FormatError(f"{config}: expected a mapping of flag names to values.")
        values = {str(key).replace("-", "_"): value for key, value in loaded.items()}
    values.update({key: value for key, value in flags.items() if value is not None})
    for alias in ("schedule", "depth"):
        if alias in values:
            values["scheme" if alias == "schedule" else "depths"] = values.pop(alias)
    values["depths"] = _parse_depths(values.get("depths"))
    values["command"] = command
    values.setdefault("output", f"{command}.csv")
    return RunConfig(**values)


def _lift(config: RunConfig) -> Optional[LiftMatrix]:
    return lift_from_descriptor(read_mapping(config.lift)) if config.lift else None


def _resolve(config: RunConfig) -> ResolvedScheme:
    """Resolve a catalog reference or a schedule descriptor file, applying --seed to seeded entries.
    config (RunConfig): Configuration with a scheme.
    RETURNS (ResolvedScheme): Resolved scheme.
    """
    if not config.scheme:
        raise FormatError("No scheme given, use --scheme or a config file.")
    if Path(config.scheme).is_file():
        return scheme_from_descriptor(read_mapping(config.scheme), _lift(config))
    reference = config.scheme
    name, _, seed = parse_reference(reference)
    if config.seed is not None and seed is None and get_entry(name).seeded:
        reference += f"{',' if ':' in reference else ':'}seed={config.seed}"
    return resolve(reference, _lift(config))


def _masks(config: RunConfig) -> Masks:
    """Masks from a descriptor file, a Laurent polynomial or a catalog reference."""
    if not config.mask:
        raise FormatError("No mask given, use --mask or a config file.")
    if Path(config.mask).is_file():
        return mask_from_descriptor(read_mapping(config.mask))
    if "z" in config.mask and ":" not in config.mask and config.mask.strip() not in [e.name for e in list_entries()]:
        return parse_laurent(config.mask)
    name, params, seed = parse_reference(config.mask)
    if get_entry(name).kind not in ("mask", "mask_sequence"):
        raise FormatError(f"Catalog entry '{name}' is not a mask.")
    return build(name, params, config.seed if seed is None else seed)


def _stem(config: RunConfig) -> Path:
    path = Path(config.output)
    return path.with_suffix("") if path.suffix else path


def _write_points(points: PointSet, path: Path, fmt: str) -> None:
    """Write a point cloud as CSV, as JSON or as CSV plus an SVG scatter."""
    if fmt == "json":
        write_json(path.with_suffix(".json"), {"points": points.points.tolist()})
        return
    write_points_csv(path.with_suffix(".csv"), points)
    if fmt == "svg":
        render_svg(points, path.with_suffix(".svg"))


def _output_points(resolved: ResolvedScheme, points: PointSet) -> PointSet:
    m = resolved.schedule.projection_dim
    return project(points, m) if m else points


def _level_factors(resolved: ResolvedScheme, K: int) -> List[float]:
    schedule = resolved.schedule
    return [schedule.factor(k) if schedule.factor else contraction_factor(schedule.system(k)) for k in range(1, K + 1)]


@app.command()
def attractor(
    scheme: Optional[str] = typer.Option(None, "--scheme", help="Catalog reference or schedule descriptor."),
    depth: Optional[int] = typer.Option(None, "--depth", help="Exact number of Hutchinson steps."),
    tol: Optional[float] = typer.Option(None, "--tol", help="Stop once consecutive iterates are this close."),
    max_iter: Optional[int] = typer.Option(None, "--max-iter", help="Iteration cap without --depth."),
    epsilon: Optional[float] = typer.Option(None, "--epsilon", help="Decimation cell size, 0 keeps every point."),
    lift: Optional[str] = typer.Option(None, "--lift", help="Lift descriptor replacing the default lift."),
    output: Optional[str] = typer.Option(None, "--output", "-o", help="Output path."),
    fmt: Optional[str] = typer.Option(None, "--format", help="csv, json or svg."),
    config: Optional[Path] = typer.Option(None, "--config", help="YAML/JSON file mirroring these flags."),
):
    """Iterate the Hutchinson operator of a function system and write its attractor with metadata. Exits with 3 if
    the tolerance was not reached.
    """
    with _usage_errors():
        cfg = _load_config(
            "attractor", config, scheme=scheme, depth=depth, tol=tol, max_iter=max_iter, epsilon=epsilon,
            lift=lift, output=output, format=fmt,
        )
        resolved = _resolve(cfg)
        if resolved.system is None:
            raise FormatError(f"'{resolved.reference}' is not a single function system, use the trajectory command.")
        F = resolved.system
        length = None
        if contraction_factor(F) >= 1:
            if resolved.masks is None or resolved.lift is None:
                raise NonContractiveError(f"'{resolved.reference}' is not contractive.")
            length = composition_search(resolved.masks, resolved.lift, cfg.horizon).length
            if length is None:
                raise NonContractiveError(f"No contractive composition found for '{resolved.reference}'.")
        fixed_depth = cfg.depths[-1] if cfg.depths else None

        if fixed_depth == 0:
            points, iterations, h_steps, converged, L, bound = resolved.initial, 0, [], True, contraction_factor(F), None
        else:
            result = ifs_attractor(
                F,
                resolved.initial,
                tol=0.0 if fixed_depth else cfg.tol,
                max_iter=fixed_depth or cfg.max_iter,
                eps=cfg.epsilon or 0.0,
                composition_length=length,
                show_progress=True,
            )
            points, iterations, h_steps, L, bound = (
                result.points, result.iterations, result.h_steps, result.contraction_factor, result.error_bound
            )
            converged = result.converged or fixed_depth is not None

        stem = _stem(cfg)
        points = _output_points(resolved, points)
        _write_points(points, stem, cfg.format)
        write_json(
            stem.with_name(stem.name + "_meta.json"),
            {
                "scheme": resolved.reference,
                "iterations": iterations,
                "final_h_step": h_steps[-1] if h_steps else None,
                "h_steps": h_steps,
                "contraction_factor": L,
                "composition_length": length or 1,
                "error_bound": bound,
                "converged": converged,
                "points": len(points),
                "maps": resolved.maps_metadata,
            },
        )
    if not converged:
        logger.warning("Attractor of '%s' did not reach tol=%g.", resolved.reference, cfg.tol)
        raise typer.Exit(code=NOT_CONVERGED)


@app.command()
def trajectory(
    schedule: Optional[str] = typer.Option(None, "--schedule", help="Catalog reference or schedule descriptor."),
    direction: Optional[str] = typer.Option(None, "--direction", help="forward or backward."),
    depths: Optional[str] = typer.Option(None, "--depths", help="Comma-separated increasing depths."),
    epsilon: Optional[float] = typer.Option(None, "--epsilon", help=f"Decimation cell size, {DEFAULT_EPSILON:g} by default."),
    seed: Optional[int] = typer.Option(None, "--seed", help="Seed for seeded catalog entries."),
    lift: Optional[str] = typer.Option(None, "--lift", help="Lift descriptor replacing the default lift."),
    output: Optional[str] = typer.Option(None, "--output", "-o", help="Output path stem."),
    fmt: Optional[str] = typer.Option(None, "--format", help="csv, json or svg."),
    config: Optional[Path] = typer.Option(None, "--config", help="YAML/JSON file mirroring these flags."),
):
    """Compute a forward or backward trajectory of a schedule and write one point cloud per depth plus diagnostics.
    Lifted schedules are projected onto the control point coordinates.
    """
    with _usage_errors():
        cfg = _load_config(
            "trajectory", config, schedule=schedule, direction=direction, depths=depths, epsilon=epsilon,
            seed=seed, lift=lift, output=output, format=fmt,
        )
        if not cfg.depths:
            raise FormatError("No depths given, use --depths.")
        resolved = _resolve(cfg)
        run = forward_trajectory if cfg.direction == "forward" else backward_trajectory
        result = run(
            resolved.schedule,
            resolved.initial,
            cfg.depths,
            eps=DEFAULT_EPSILON if cfg.epsilon is None else cfg.epsilon,
            show_progress=True,
        )

        stem = _stem(cfg)
        sets = [_output_points(resolved, points) for points in result.sets]
        for depth, points in zip(result.depths, sets):
            _write_points(points, stem.with_name(f"{stem.name}_{cfg.direction}_{depth}"), cfg.format)
        factors = _level_factors(resolved, result.depths[-1])
        write_json(
            stem.with_name(f"{stem.name}_{cfg.direction}_diagnostics.json"),
            {
                "scheme": resolved.reference,
                "direction": cfg.direction,
                "depths": result.depths,
                "epsilon": result.epsilon,
                "points": [len(points) for points in sets],
                "h_steps": [hausdorff(a, b) for a, b in zip(sets, sets[1:])],
                "product": product_diagnostic(factors).model_dump() if factors else None,
                "maps": resolved.maps_metadata,
            },
        )


@app.command()
def subdivide(
    input: Optional[str] = typer.Option(None, "--input", "-i", help="Control polygon CSV."),
    mask: Optional[str] = typer.Option(None, "--mask", help="Catalog mask, Laurent polynomial or descriptor."),
    depth: Optional[int] = typer.Option(None, "--depth", help="Number of refinement levels."),
    seed: Optional[int] = typer.Option(None, "--seed", help="Seed for seeded catalog entries."),
    output: Optional[str] = typer.Option(None, "--output", "-o", help="Output path."),
    fmt: Optional[str] = typer.Option(None, "--format", help="csv, json or svg."),
    config: Optional[Path] = typer.Option(None, "--config", help="YAML/JSON file mirroring these flags."),
):
    """Refine a control polygon K times and write the level-K polygon with a convergence estimate."""
    with _usage_errors():
        cfg = _load_config(
            "subdivide", config, input=input, mask=mask, depth=depth, seed=seed, output=output, format=fmt
        )
        if not cfg.input:
            raise FormatError("No control polygon given, use --input.")
        if len(cfg.depths) != 1:
            raise FormatError("Subdivision needs exactly one --depth.")
        K = cfg.depths[0]
        p0 = read_points_csv(cfg.input)
        masks = _masks(cfg)
        points = subdivide_levels(masks, p0, K)
        estimate = c0_convergence_estimate(masks, p0, K) if K >= 2 else None

        stem = _stem(cfg)
        # keeps the refined polygon order, no deduplication
        _write_points(PointSet(points=points), stem, cfg.format)
        write_json(
            stem.with_name(stem.name + "_convergence.json"),
            {
                "depth": K,
                "points": len(points),
                "mask": masks.description if not isinstance(masks, Mask) else masks.coeffs.tolist(),
                "convergence": estimate.model_dump() if estimate else None,
            },
        )


@app.command()
def diagnose(
    schedule: Optional[str] = typer.Option(None, "--schedule", help="Catalog reference or schedule descriptor."),
    horizon: Optional[int] = typer.Option(None, "--horizon", help="Number of levels inspected."),
    max_length: Optional[int] = typer.Option(
        None, "--max-length", help="Longest composition tried, 10 for a single mask and 16 for a mask sequence."
    ),
    seed: Optional[int] = typer.Option(None, "--seed", help="Seed for seeded catalog entries."),
    lift: Optional[str] = typer.Option(None, "--lift", help="Lift descriptor replacing the default lift."),
    output: Optional[str] = typer.Option(None, "--output", "-o", help="Report path."),
    config: Optional[Path] = typer.Option(None, "--config", help="YAML/JSON file mirroring these flags."),
):
    """Classify the convergence of a schedule from its contraction factors and print a summary."""
    with _usage_errors():
        cfg = _load_config(
            "diagnose", config, schedule=schedule, horizon=horizon, max_length=max_length, seed=seed,
            lift=lift, output=output,
        )
        resolved = _resolve(cfg)
        report = diagnose_scheme(resolved, horizon=cfg.horizon, max_length=cfg.max_length, show_progress=True)
        write_json(Path(cfg.output).with_suffix(".json"), report.model_dump())

    table = prettytable.PrettyTable(field_names=["property", "value"], align="l")
    composition = report.composition
    table.add_rows(
        [
            ["scheme", report.scheme],
            ["horizon", report.horizon],
            ["case", report.case],
            ["product", report.product.classification],
            ["final partial product", f"{report.product.partial_products[-1]:.6g}"],
            ["partial sum", f"{report.product.partial_sums[-1]:.6g}"],
            ["composition length", composition.length if composition else "-"],
            ["reproduces constants", "-" if report.reproduces_constants is None else report.reproduces_constants],
            ["subdominant radius", "-" if report.subdominant_radius is None else f"{report.subdominant_radius:.6g}"],
        ]
    )
    typer.echo(table)


@catalog_app.command("list")
def catalog_list():
    """List catalog entries with their parameters and defaults."""
    table = prettytable.PrettyTable(field_names=["name", "kind", "params", "seeded", "description"], align="l")
    for entry in list_entries():
        params = ", ".join(f"{key}={value:g}" for key, value in entry.params.items()) or "-"
        table.add_row([entry.name, entry.kind, params, "yes" if entry.seeded else "no", entry.description])
    typer.echo(table)


if __name__ == "__main__":
    app()
