""" Named masks, mask sequences, function systems and schedules, addressable as "name:param=value,seed=7". """

import math
import threading
from typing import Any, Dict, List, Optional, Tuple

import numpy
import tqdm

from ..utils import get_logger
from .constants import (
    CUBIC_BSPLINE_COEFFS,
    DEFAULT_CUBIC_POLYGON,
    FOUR_POINT_POLYGON,
    MASK_LIMIT_TOLERANCE,
)
from .function_systems import constant_schedule, contraction_factor, product_diagnostic
from .schemas import (
    AffineMap,
    CatalogEntry,
    CatalogError,
    DiagnoseReport,
    FunctionSystem,
    LiftMatrix,
    Mask,
    MaskSequence,
    PointSet,
    ResolvedScheme,
    SfsSchedule,
)
from .sfs_bridge import build_p_matrix, composition_search, conjugate_to_plane, lift, sfs_from_subdivision
from .subdivision import check_constant_reproduction, mask_at, slice_matrices, subdominant_radius

logger = get_logger(__name__)


def cubic_bspline_mask() -> Mask:
    """Mask (1 + z)^4 / 8 of cubic B-spline subdivision."""
    return Mask(coeffs=CUBIC_BSPLINE_COEFFS, offset=0)


def exponential_spline_mask(lam: float, k: int) -> Mask:
    """Level-k mask b_k (1 + z)(1 + c_k z)^3 with c_k = exp(lam 2^(-k-1)) and b_k = (1 + c_k)^-3.
    lam (float): Tension parameter.
    k (int): Level, at least 1.
    RETURNS (Mask): a^[k].
    """
    c = math.exp(lam * 2.0 ** (-k - 1))
    b = 1.0 / (1.0 + c) ** 3
    return Mask(
        coeffs=(b, b * (1 + 3 * c), b * (3 * c + 3 * c**2), b * (3 * c**2 + c**3), b * c**3),
        offset=0,
    )


def exponential_spline_masks(lam: float) -> MaskSequence:
    """Non-stationary masks generating exponential splines, converging to the cubic B-spline mask.
    lam (float): Tension parameter; 0 gives the cubic mask at every level.
    RETURNS (MaskSequence): a^[k], k >= 1.
    """
    if not math.isfinite(lam):
        raise ValueError(f"lambda must be finite, got {lam}.")
    return MaskSequence(
        generator=lambda k: exponential_spline_mask(lam, k),
        support_size=5,
        description=f"exponential spline, lambda={lam:g}",
        limit=cubic_bspline_mask(),
    )


class SeededUniform:
    """Values w_k = center + b (2 u_k - 1) with u_k drawn in order from a PCG64 stream and kept once drawn, so a level
    never sees two different values.
    """

    def __init__(self, b: float, seed: int, center: float = 0.0):
        self.b = b
        self.center = center
        self._rng = numpy.random.Generator(numpy.random.PCG64(seed))
        self._values: List[float] = []
        self._lock = threading.Lock()

    def __call__(self, k: int) -> float:
        with self._lock:
            while len(self._values) < k:
                self._values.append(self.center + self.b * (2.0 * self._rng.random() - 1.0))
            return self._values[k - 1]


def fourpoint_mask(w: float) -> Mask:
    """Interpolatory 4-point mask -w (z^-3 + z^3) + (1/2 + w)(z^-1 + z) + 1.
    w (float): Tension.
    RETURNS (Mask): Mask on offsets -3..3, zero-padded when w = 0.
    """
    return Mask(coeffs=(-w, 0.0, 0.5 + w, 1.0, 0.5 + w, 0.0, -w), offset=-3, padded=w == 0)


def random_fourpoint_masks(b: float, seed: int = 0, center: float = 0.0) -> MaskSequence:
    """4-point masks with tension w_k drawn uniformly from [center - b, center + b].
    b (float): Half width of the interval, nonnegative.
    seed (int): Seed of the PCG64 stream.
    center (float): Interval center; b = 0 with center 1/16 is the classical 4-point scheme.
    RETURNS (MaskSequence): a^[k], k >= 1.
    """
    if b < 0:
        raise ValueError(f"Interval half width must be nonnegative, got {b}.")
    tension = SeededUniform(b, seed, center)
    return MaskSequence(
        generator=lambda k: fourpoint_mask(tension(k)),
        support_size=7,
        description=f"random 4-point, w in [{center - b:g}, {center + b:g}], seed={seed}",
    )


def _similitude(ratio: float, angle: float, shift: Tuple[float, float]) -> AffineMap:
    cos, sin = math.cos(angle), math.sin(angle)
    return AffineMap(A=[[ratio * cos, -ratio * sin], [ratio * sin, ratio * cos]], b=shift)


def koch_ifs() -> FunctionSystem:
    """Four similitudes of ratio 1/3 mapping the unit segment onto the pieces of the Koch generator."""
    third = 1.0 / 3.0
    return FunctionSystem(
        maps=[
            _similitude(third, 0.0, (0.0, 0.0)),
            _similitude(third, math.pi / 3, (third, 0.0)),
            _similitude(third, -math.pi / 3, (0.5, math.sqrt(3) / 6)),
            _similitude(third, 0.0, (2 * third, 0.0)),
        ],
        label="koch",
    )


def cantor_ifs() -> FunctionSystem:
    return FunctionSystem(
        maps=[AffineMap(A=[[1 / 3]], b=[0.0]), AffineMap(A=[[1 / 3]], b=[2 / 3])],
        label="cantor",
    )


def dyadic_ifs() -> FunctionSystem:
    return FunctionSystem(
        maps=[AffineMap(A=[[0.5]], b=[0.0]), AffineMap(A=[[0.5]], b=[0.5])],
        label="dyadic",
    )


def default_polygon(n: int = 5) -> numpy.ndarray:
    """Default planar control polygon with n points, extending the base polygon periodically in y.
    n (int): Number of points, at least 5.
    RETURNS (numpy.ndarray): (n, 2) array.
    """
    if n < 5:
        raise ValueError(f"The cubic function system needs n >= 5, got {n}.")
    ys = [y for _, y in DEFAULT_CUBIC_POLYGON]
    return numpy.array([(float(i), ys[i % len(ys)]) for i in range(n)])


def cubic_lift(n: int = 5) -> LiftMatrix:
    return build_p_matrix(default_polygon(n))


def cubic_spline_fs(n: int = 5) -> FunctionSystem:
    """Two lifted maps on R^n of cubic B-spline subdivision, conjugated by P of the default polygon.
    n (int): Slice size, at least 5.
    RETURNS (FunctionSystem): Stationary lifted system.
    """
    system = sfs_from_subdivision(cubic_bspline_mask(), cubic_lift(n)).system(1)
    return FunctionSystem(maps=system.maps, label="cubic spline")


def cubic_plane_pair() -> FunctionSystem:
    """Planar affine pair acting like cubic B-spline refinement on the default polygon."""
    L = cubic_lift(5)
    slices = slice_matrices(cubic_bspline_mask(), 5)
    pair = conjugate_to_plane([lift(slices.S1, L), lift(slices.S2, L)], 2)
    return FunctionSystem(maps=pair.maps, label="cubic spline (planar)")


def hidden_fractal_schedule(block: int = 5) -> SfsSchedule:
    """Blocks of `block` cubic levels followed by `block` Koch levels, repeated.
    block (int): Block length, at least 1.
    RETURNS (SfsSchedule): Planar schedule.
    """
    if block < 1:
        raise ValueError(f"Block length must be positive, got {block}.")
    cubic, koch = cubic_plane_pair(), koch_ifs()
    return SfsSchedule(
        generator=lambda k: cubic if ((k - 1) // block) % 2 == 0 else koch,
        dim=2,
        description=f"hidden fractal: {block} cubic levels, then {block} Koch levels",
    )


def alternating_halves_schedule(c: float = 3.0) -> SfsSchedule:
    """x -> x/2 at odd levels and x -> x/2 + c at even levels.
    c (float): Shift.
    RETURNS (SfsSchedule): One-dimensional schedule.
    """
    odd = FunctionSystem(maps=[AffineMap(A=[[0.5]], b=[0.0])], label="x/2")
    even = FunctionSystem(maps=[AffineMap(A=[[0.5]], b=[c])], label=f"x/2+{c:g}")
    return SfsSchedule(
        generator=lambda k: odd if k % 2 else even,
        dim=1,
        description=f"alternating x/2 and x/2+{c:g}",
    )


CATALOG: Dict[str, CatalogEntry] = {
    entry.name: entry
    for entry in [
        CatalogEntry(
            name="cubic",
            kind="mask",
            description="Cubic B-spline mask (1+z)^4/8.",
            builder=cubic_bspline_mask,
        ),
        CatalogEntry(
            name="expspline",
            kind="mask_sequence",
            description="Exponential spline masks converging to the cubic mask.",
            params={"lambda": 3.0},
            builder=lambda **kw: exponential_spline_masks(kw["lambda"]),
        ),
        CatalogEntry(
            name="random4pt",
            kind="mask_sequence",
            description="4-point masks with seeded uniform tension in [center-b, center+b].",
            params={"b": 0.4, "center": 0.0},
            seeded=True,
            builder=random_fourpoint_masks,
        ),
        CatalogEntry(name="koch", kind="function_system", description="Koch curve IFS.", builder=koch_ifs),
        CatalogEntry(name="cantor", kind="function_system", description="Middle-third Cantor IFS.", builder=cantor_ifs),
        CatalogEntry(name="dyadic", kind="function_system", description="x/2, x/2+1/2 on [0, 1].", builder=dyadic_ifs),
        CatalogEntry(
            name="cubic-fs",
            kind="function_system",
            description="Lifted cubic spline system on R^n.",
            params={"n": 5},
            builder=lambda **kw: cubic_spline_fs(int(kw["n"])),
        ),
        CatalogEntry(
            name="hidden-fractal",
            kind="schedule",
            description="Alternating blocks of cubic spline and Koch levels.",
            params={"block": 5},
            builder=lambda **kw: hidden_fractal_schedule(int(kw["block"])),
        ),
        CatalogEntry(
            name="halves",
            kind="schedule",
            description="x/2 at odd levels, x/2+c at even levels.",
            params={"c": 3.0},
            builder=alternating_halves_schedule,
        ),
    ]
}

_INITIAL_SETS: Dict[str, List[List[float]]] = {
    "koch": [[0.0, 0.0], [1.0, 0.0]],
    "hidden-fractal": [[0.0, 0.0], [1.0, 0.0]],
    "cantor": [[0.0], [1.0]],
    "dyadic": [[0.0]],
    "halves": [[0.0]],
}


def list_entries() -> List[CatalogEntry]:
    return [CATALOG[name] for name in sorted(CATALOG)]


def get_entry(name: str) -> CatalogEntry:
    """Look up a catalog entry.
    name (str): Entry name.
    RETURNS (CatalogEntry): The entry.
    """
    if name not in CATALOG:
        raise CatalogError(f"Unknown catalog entry '{name}'. Known entries: {', '.join(sorted(CATALOG))}.")
    return CATALOG[name]


def parse_reference(reference: str) -> Tuple[str, Dict[str, float], Optional[int]]:
    """Split "name:key=value,...,seed=7" into its parts.
    reference (str): Catalog reference.
    RETURNS (Tuple[str, Dict[str, float], Optional[int]]): Name, parameters and seed.
    """
    name, _, rest = reference.strip().partition(":")
    entry = get_entry(name.strip())
    params: Dict[str, float] = {}
    seed: Optional[int] = None
    for item in filter(None, (part.strip() for part in rest.split(","))):
        key, sep, value = (s.strip() for s in item.partition("="))
        if not sep:
            raise CatalogError(f"Malformed parameter '{item}' in '{reference}', expected key=value.")
        try:
            if key == "seed" and entry.seeded:
                seed = int(value)
            elif key in entry.params:
                params[key] = float(value)
            else:
                raise CatalogError(f"Entry '{entry.name}' has no parameter '{key}'.")
        except ValueError as err:
            raise CatalogError(f"Invalid value '{value}' for '{key}' in '{reference}'.") from err
    return entry.name, params, seed


def build(name: str, params: Optional[Dict[str, Any]] = None, seed: Optional[int] = None) -> Any:
    """Build a catalog object. Identical arguments build bit-identical objects.
    name (str): Entry name.
    params (Optional[Dict[str, Any]]): Parameter overrides.
    seed (Optional[int]): Seed for seeded entries, 0 if not given.
    RETURNS (Any): Mask, MaskSequence, FunctionSystem or SfsSchedule.
    """
    entry = get_entry(name)
    unknown = set(params or {}) - set(entry.params)
    if unknown:
        raise CatalogError(f"Entry '{name}' has no parameter(s) {sorted(unknown)}.")
    kwargs: Dict[str, Any] = {**entry.params, **(params or {})}
    if entry.seeded:
        kwargs["seed"] = 0 if seed is None else seed
    return entry.builder(**kwargs)


def default_lift(name: str, params: Optional[Dict[str, Any]] = None) -> Optional[LiftMatrix]:
    """Lift used with a catalog mask unless another one is supplied.
    name (str): Entry name.
    params (Optional[Dict[str, Any]]): Entry parameters.
    RETURNS (Optional[LiftMatrix]): P of the default polygon, None for entries that are not lifted.
    """
    if name == "random4pt":
        return build_p_matrix(FOUR_POINT_POLYGON)
    if name in ("cubic", "expspline"):
        return cubic_lift(5)
    if name == "cubic-fs":
        return cubic_lift(int((params or {}).get("n", 5)))
    return None


def resolve(reference: str, lift_matrix: Optional[LiftMatrix] = None) -> ResolvedScheme:
    """Turn a catalog reference into a schedule with its default start set.
    reference (str): Catalog reference, e.g. "random4pt:b=0.4,seed=7".
    lift_matrix (Optional[LiftMatrix]): Lift replacing the default one of mask entries.
    RETURNS (ResolvedScheme): Schedule, start set and the objects behind it.
    """
    name, params, seed = parse_reference(reference)
    entry = get_entry(name)
    obj = build(name, params, seed)
    logger.info("Resolved '%s' to %s '%s'.", reference, entry.kind.replace("_", " "), name)

    if entry.kind in ("mask", "mask_sequence"):
        L = lift_matrix or default_lift(name, params)
        schedule = sfs_from_subdivision(obj, L)
        return ResolvedScheme(
            reference=reference,
            kind=entry.kind,
            schedule=schedule,
            initial=PointSet(points=L.matrix),
            system=schedule.system(1) if entry.kind == "mask" else None,
            masks=obj,
            lift=L,
        )

    if entry.kind == "function_system":
        L = default_lift(name, params)
        return ResolvedScheme(
            reference=reference,
            kind=entry.kind,
            schedule=constant_schedule(obj) if L is None else sfs_from_subdivision(cubic_bspline_mask(), L),
            initial=PointSet(points=L.matrix if L is not None else _INITIAL_SETS[name]),
            system=obj,
            masks=cubic_bspline_mask() if L is not None else None,
            lift=L,
            maps_metadata=_maps_metadata(obj),
        )

    metadata: Dict[str, Any] = {}
    if name == "hidden-fractal":
        metadata = {"cubic": _maps_metadata(cubic_plane_pair()), "koch": _maps_metadata(koch_ifs())}
    return ResolvedScheme(
        reference=reference,
        kind=entry.kind,
        schedule=obj,
        initial=PointSet(points=_INITIAL_SETS[name]),
        maps_metadata=metadata,
    )


def _mask_distance(a: Mask, b: Mask) -> float:
    if a.offset != b.offset or a.support_size != b.support_size:
        return float("inf")
    return float(numpy.abs(a.coeffs - b.coeffs).max())


def diagnose_scheme(
    resolved: ResolvedScheme,
    horizon: int = 200,
    max_length: Optional[int] = None,
    show_progress: bool = False,
) -> DiagnoseReport:
    """Classify a schedule into the convergence cases of lifted subdivision: (i) a stationary constants-reproducing
    scheme with a contractive composition, (ii) masks converging to such a scheme, (iii) a converging sum of products
    of (block) contraction factors. Schedules without masks are checked against (iii) only.
    resolved (ResolvedScheme): Resolved scheme.
    horizon (int): Number of levels inspected.
    max_length (Optional[int]): Longest composition tried, the composition search default if not given.
    show_progress (bool): Whether to show a progress bar.
    RETURNS (DiagnoseReport): Per-level factors, product diagnostic, composition search and case.
    """
    schedule = resolved.schedule
    level_factors: List[float] = []
    for k in tqdm.tqdm(range(1, horizon + 1), desc="Level factors", leave=True, disable=not show_progress):
        level_factors.append(schedule.factor(k) if schedule.factor else contraction_factor(schedule.system(k)))
    product = product_diagnostic(level_factors)

    masks, L = resolved.masks, resolved.lift
    if masks is None or L is None:
        return DiagnoseReport(
            scheme=resolved.reference,
            horizon=horizon,
            level_factors=level_factors,
            product=product,
            case="iii" if product.classification == "sum-converges" else "none",
        )

    levels = range(1, horizon + 1)
    reproduces = all(check_constant_reproduction(mask_at(masks, k)).reproduces for k in levels)
    radius = max(subdominant_radius(slice_matrices(mask_at(masks, k), L.n)) for k in levels)

    limit = masks if isinstance(masks, Mask) else masks.limit
    limit_reached = limit is not None and (
        isinstance(masks, Mask) or _mask_distance(masks.mask(horizon), limit) <= MASK_LIMIT_TOLERANCE
    )
    if limit_reached and check_constant_reproduction(limit).reproduces:
        search = composition_search(limit, L, horizon, max_length)
        if search.length is not None:
            case = "i" if isinstance(masks, Mask) else "ii"
            return DiagnoseReport(
                scheme=resolved.reference,
                horizon=horizon,
                level_factors=level_factors,
                product=product,
                composition=search,
                reproduces_constants=reproduces,
                subdominant_radius=radius,
                case=case,
            )

    search = composition_search(masks, L, horizon, max_length)
    return DiagnoseReport(
        scheme=resolved.reference,
        horizon=horizon,
        level_factors=level_factors,
        product=product,
        composition=search,
        reproduces_constants=reproduces,
        subdominant_radius=radius,
        case="iii" if search.length is not None and not isinstance(masks, Mask) else "none",
    )


def _maps_metadata(F: FunctionSystem) -> Dict[str, Any]:
    return {
        "label": F.label,
        "maps": [{"A": f.A.tolist(), "b": f.b.tolist()} for f in F.maps],
    }
