""" Schemas and exceptions for types used in this project. """

from typing import Any, Callable, Dict, List, Literal, Optional, Tuple

import numpy
from pydantic import ConfigDict, field_validator, model_validator
from pydantic.fields import Field
from pydantic.main import BaseModel
from pydantic.types import StrictInt

from .constants import CONSTANTS_TOLERANCE, LAST_COLUMN_TOLERANCE, MAX_LIFT_CONDITION


class SFSError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatchError(SFSError, ValueError):
    """Point sets, maps or matrices of incompatible dimension were combined."""


class NonContractiveError(SFSError, ValueError):
    """A function system is not contractive and no composition length was asserted."""


class SingularLiftError(SFSError, ValueError):
    """A lift matrix is singular or too badly conditioned to invert."""

    def __init__(self, message: str, condition: Optional[float] = None):
        super().__init__(message)
        self.condition = condition


class InsufficientDataError(SFSError, ValueError):
    """Too few control points for the requested mask or slice size."""


class ConstantsNotReproducedError(SFSError, ValueError):
    """An operation needs a lifted map that reproduces constants."""


class CatalogError(SFSError, KeyError):
    """Unknown catalog entry or invalid entry parameters."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


class FormatError(SFSError, ValueError):
    """Malformed input file or descriptor."""


_ARRAY_CONFIG = ConfigDict(arbitrary_types_allowed=True, frozen=True)


def _frozen_array(value: Any, ndim: int, name: str) -> numpy.ndarray:
    """Convert value into a read-only float array of given dimensionality.
    value (Any): Array-like input.
    ndim (int): Expected number of dimensions.
    name (str): Name used in error messages.
    RETURNS (numpy.ndarray): Read-only copy.
    """
    try:
        array = numpy.array(value, dtype=float)
    except (TypeError, ValueError) as err:
        raise ValueError(f"{name} is not numeric: {err}") from err
    if array.ndim != ndim:
        raise ValueError(f"{name} must have {ndim} dimension(s), got {array.ndim}.")
    if not numpy.all(numpy.isfinite(array)):
        raise ValueError(f"{name} contains non-finite values.")
    array.setflags(write=False)
    return array


class PointSet(BaseModel):
    """Finite, nonempty set of points in R^m, stored as the rows of an (N, m) array. A flat list of numbers is read
    as N points in R^1.
    """

    model_config = _ARRAY_CONFIG

    points: numpy.ndarray = Field(..., title="Points as rows.")

    @field_validator("points", mode="before")
    @classmethod
    def _check_points(cls, value: Any) -> numpy.ndarray:
        array = numpy.array(value, dtype=float)
        if array.ndim == 1:
            array = array.reshape(-1, 1)
        array = _frozen_array(array, 2, "points")
        if array.shape[0] == 0 or array.shape[1] == 0:
            raise ValueError("Point sets must be nonempty and have positive dimension.")
        return array

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])

    def __len__(self) -> int:
        return int(self.points.shape[0])

    def unique(self) -> "PointSet":
        """Drop exact duplicate points.
        RETURNS (PointSet): Point set without repeated rows, in lexicographic order.
        """
        return PointSet(points=numpy.unique(self.points, axis=0))


class AffineMap(BaseModel):
    """Affine map x -> A x + b on R^m."""

    model_config = _ARRAY_CONFIG

    A: numpy.ndarray = Field(..., title="Linear part, m x m.")
    b: numpy.ndarray = Field(..., title="Translation, length m.")

    @field_validator("A", mode="before")
    @classmethod
    def _check_linear(cls, value: Any) -> numpy.ndarray:
        array = _frozen_array(value, 2, "A")
        if array.shape[0] != array.shape[1] or array.shape[0] == 0:
            raise ValueError(f"A must be square and nonempty, got shape {array.shape}.")
        return array

    @field_validator("b", mode="before")
    @classmethod
    def _check_translation(cls, value: Any) -> numpy.ndarray:
        return _frozen_array(numpy.ravel(numpy.array(value, dtype=float)), 1, "b")

    @model_validator(mode="after")
    def _check_shapes(self) -> "AffineMap":
        if self.b.shape[0] != self.A.shape[0]:
            raise DimensionMismatchError(
                f"Translation of length {self.b.shape[0]} does not fit a {self.A.shape[0]}-dimensional map."
            )
        return self

    @classmethod
    def linear(cls, A: Any) -> "AffineMap":
        """Map without translation.
        A (Any): Square matrix.
        RETURNS (AffineMap): x -> A x.
        """
        A = numpy.asarray(A, dtype=float)
        return cls(A=A, b=numpy.zeros(A.shape[0]))

    @property
    def dim(self) -> int:
        return int(self.A.shape[0])

    def apply(self, points: numpy.ndarray) -> numpy.ndarray:
        """Apply map to points stored row-wise.
        points (numpy.ndarray): (N, m) array.
        RETURNS (numpy.ndarray): (N, m) array of images.
        """
        if points.shape[1] != self.dim:
            raise DimensionMismatchError(
                f"Cannot apply a {self.dim}-dimensional map to {points.shape[1]}-dimensional points."
            )
        return points @ self.A.T + self.b

    def compose(self, inner: "AffineMap") -> "AffineMap":
        """Composition self o inner.
        inner (AffineMap): Map applied first.
        RETURNS (AffineMap): x -> A (A' x + b') + b.
        """
        if inner.dim != self.dim:
            raise DimensionMismatchError(
                f"Cannot compose maps of dimension {self.dim} and {inner.dim}."
            )
        return AffineMap(A=self.A @ inner.A, b=self.A @ inner.b + self.b)


class FunctionSystem(BaseModel):
    """Finite, nonempty list of affine maps on a common space."""

    model_config = _ARRAY_CONFIG

    maps: List[AffineMap] = Field(..., title="Maps of the system.")
    label: Optional[str] = Field(None, title="Human-readable name.")

    @field_validator("maps")
    @classmethod
    def _check_maps(cls, value: List[AffineMap]) -> List[AffineMap]:
        if not value:
            raise ValueError("A function system needs at least one map.")
        dims = {f.dim for f in value}
        if len(dims) != 1:
            raise DimensionMismatchError(f"Maps of differing dimensions {sorted(dims)}.")
        return value

    @property
    def dim(self) -> int:
        return self.maps[0].dim

    def __len__(self) -> int:
        return len(self.maps)


class SfsSchedule(BaseModel):
    """Sequence of function systems F_1, F_2, ... indexed by level k >= 1."""

    model_config = _ARRAY_CONFIG

    generator: Callable[[int], FunctionSystem] = Field(..., title="Level -> function system.")
    dim: StrictInt = Field(..., title="Dimension of the space the systems act on.")
    description: str = Field("", title="Human-readable description.")
    factor: Optional[Callable[[int], float]] = Field(
        None, title="Level -> contraction factor, if not the plain maximum of spectral norms."
    )
    projection_dim: Optional[StrictInt] = Field(
        None, title="Number of leading coordinates kept when projecting lifted sets."
    )

    def system(self, k: int) -> FunctionSystem:
        """Function system at level k.
        k (int): Level, at least 1.
        RETURNS (FunctionSystem): F_k.
        """
        if k < 1:
            raise ValueError(f"Levels start at 1, got {k}.")
        system = self.generator(k)
        if system.dim != self.dim:
            raise DimensionMismatchError(
                f"Level {k} has dimension {system.dim}, schedule declares {self.dim}."
            )
        return system


class InvariantBall(BaseModel):
    """Closed ball mapped into itself by every map of a function system."""

    model_config = _ARRAY_CONFIG

    center: numpy.ndarray = Field(..., title="Ball center q.")
    radius: float = Field(..., ge=0, title="Ball radius.")
    mu: float = Field(..., ge=0, lt=1, title="Contraction bound.")
    M: float = Field(..., ge=0, title="Bound on |f(q) - q|.")

    @field_validator("center", mode="before")
    @classmethod
    def _check_center(cls, value: Any) -> numpy.ndarray:
        return _frozen_array(numpy.ravel(numpy.array(value, dtype=float)), 1, "center")

    def contains(self, points: PointSet, tol: float = 1e-12) -> bool:
        """Whether all points lie in the ball.
        points (PointSet): Points to test.
        tol (float): Relative slack on the radius.
        RETURNS (bool): True if every point is within radius of the center.
        """
        distances = numpy.linalg.norm(points.points - self.center, axis=1)
        return bool(numpy.all(distances <= self.radius * (1 + tol) + tol))


class Mask(BaseModel):
    """Finitely supported sequence a_j, stored as coefficients of a_offset ... a_{offset+L-1}."""

    model_config = _ARRAY_CONFIG

    coeffs: numpy.ndarray = Field(..., title="Coefficients in order of increasing index.")
    offset: StrictInt = Field(0, title="Index of the first coefficient.")
    padded: bool = Field(False, title="Whether zero end coefficients are kept.")

    @field_validator("coeffs", mode="before")
    @classmethod
    def _check_coeffs(cls, value: Any) -> numpy.ndarray:
        array = _frozen_array(numpy.ravel(numpy.array(value, dtype=float)), 1, "coeffs")
        if array.shape[0] == 0:
            raise ValueError("A mask needs at least one coefficient.")
        return array

    @model_validator(mode="after")
    def _check_support(self) -> "Mask":
        if not numpy.any(self.coeffs):
            raise ValueError("A mask must have a nonzero coefficient.")
        if not self.padded and (self.coeffs[0] == 0 or self.coeffs[-1] == 0):
            raise ValueError("Mask support must be tight: end coefficients are zero.")
        return self

    @property
    def support_size(self) -> int:
        return int(self.coeffs.shape[0])

    @property
    def ell(self) -> int:
        return self.support_size // 2

    @property
    def support(self) -> Tuple[int, int]:
        return self.offset, self.offset + self.support_size - 1

    def coefficient(self, j: int) -> float:
        """Coefficient a_j, zero outside the support.
        j (int): Index.
        RETURNS (float): a_j.
        """
        lo, hi = self.support
        return float(self.coeffs[j - lo]) if lo <= j <= hi else 0.0


class MaskSequence(BaseModel):
    """Masks a^[k] indexed by level k >= 1, all with the same support size."""

    model_config = _ARRAY_CONFIG

    generator: Callable[[int], Mask] = Field(..., title="Level -> mask.")
    support_size: StrictInt = Field(..., gt=0, title="Common support size L.")
    description: str = Field("", title="Human-readable description.")
    limit: Optional[Mask] = Field(None, title="Stationary mask the sequence converges to, if known.")

    def mask(self, k: int) -> Mask:
        """Mask at level k.
        k (int): Level, at least 1.
        RETURNS (Mask): a^[k].
        """
        if k < 1:
            raise ValueError(f"Levels start at 1, got {k}.")
        mask = self.generator(k)
        if mask.support_size != self.support_size:
            raise ValueError(
                f"Mask at level {k} has support size {mask.support_size}, expected {self.support_size}."
            )
        return mask


class ConstantsReproduction(BaseModel):
    """Result of checking sum a_{2j} = sum a_{2j+1} = 1."""

    reproduces: bool = Field(..., title="Whether both parity sums equal one.")
    even_sum: float = Field(..., title="Sum of coefficients with even index.")
    odd_sum: float = Field(..., title="Sum of coefficients with odd index.")


class SliceMatrices(BaseModel):
    """The two n x n slices S_1, S_2 of the bi-infinite refinement matrix."""

    model_config = _ARRAY_CONFIG

    S1: numpy.ndarray = Field(..., title="Left slice.")
    S2: numpy.ndarray = Field(..., title="Right slice.")
    n: StrictInt = Field(..., title="Slice size.")
    parity: Literal["even", "odd"] = Field(..., title="Parity of the mask support size.")

    def __getitem__(self, r: int) -> numpy.ndarray:
        if r == 1:
            return self.S1
        if r == 2:
            return self.S2
        raise IndexError(f"Slices are indexed by 1 and 2, got {r}.")


class LiftMatrix(BaseModel):
    """Nonsingular n x n matrix whose last column is all ones."""

    model_config = _ARRAY_CONFIG

    matrix: numpy.ndarray = Field(..., title="The lift matrix.")
    kind: Literal["P", "H"] = Field(..., title="P embeds a control polygon, H is the universal basis.")
    m: StrictInt = Field(..., ge=0, title="Number of leading columns holding control points.")

    @field_validator("matrix", mode="before")
    @classmethod
    def _check_matrix(cls, value: Any) -> numpy.ndarray:
        array = _frozen_array(value, 2, "matrix")
        if array.shape[0] != array.shape[1] or array.shape[0] < 2:
            raise ValueError(f"A lift matrix must be square of size >= 2, got {array.shape}.")
        if not numpy.allclose(array[:, -1], 1.0, rtol=0, atol=CONSTANTS_TOLERANCE):
            raise ValueError("The last column of a lift matrix must be all ones.")
        condition = float(numpy.linalg.cond(array))
        if not numpy.isfinite(condition) or condition > MAX_LIFT_CONDITION:
            raise SingularLiftError(
                f"Lift matrix is singular or ill-conditioned (condition number {condition:.3g}).",
                condition=condition,
            )
        return array

    @property
    def n(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def control_points(self) -> numpy.ndarray:
        return numpy.array(self.matrix[:, : self.m])


class LiftedMap(BaseModel):
    """Lifted n x n matrix M_r = L^-1 S_r L, acting on row vectors x -> x M_r."""

    model_config = _ARRAY_CONFIG

    matrix: numpy.ndarray = Field(..., title="Lifted matrix.")
    reproduces_constants: bool = Field(..., title="Whether the slice reproduces constants.")

    @field_validator("matrix", mode="before")
    @classmethod
    def _check_matrix(cls, value: Any) -> numpy.ndarray:
        array = _frozen_array(value, 2, "matrix")
        if array.shape[0] != array.shape[1]:
            raise ValueError(f"A lifted map must be square, got {array.shape}.")
        return array

    @model_validator(mode="after")
    def _check_last_column(self) -> "LiftedMap":
        if self.reproduces_constants:
            unit = numpy.zeros(self.n)
            unit[-1] = 1.0
            if not numpy.allclose(self.matrix[:, -1], unit, rtol=0, atol=LAST_COLUMN_TOLERANCE):
                raise ValueError("Lifted map of a constants-reproducing slice must have last column e_n.")
        return self

    @property
    def n(self) -> int:
        return int(self.matrix.shape[0])


class BlockStructure(BaseModel):
    """Decomposition M = [[G, 0], [v, 1]] of a constants-reproducing lifted map."""

    model_config = _ARRAY_CONFIG

    G: numpy.ndarray = Field(..., title="Upper-left (n-1) x (n-1) block.")
    v: numpy.ndarray = Field(..., title="Bottom row without its last entry.")
    spectral_norm: float = Field(..., ge=0, title="Spectral norm of G.")


class AttractorResult(BaseModel):
    """Outcome of iterating a Hutchinson operator towards its attractor."""

    model_config = _ARRAY_CONFIG

    points: PointSet = Field(..., title="Final iterate.")
    iterations: StrictInt = Field(..., title="Number of Hutchinson steps performed.")
    h_steps: List[float] = Field(..., title="Hausdorff distance between consecutive iterates.")
    converged: bool = Field(..., title="Whether the last step fell below tolerance.")
    contraction_factor: float = Field(..., title="Maximum Lipschitz constant of the maps.")
    composition_length: StrictInt = Field(1, title="Composition length asserted to be contractive.")
    error_bound: Optional[float] = Field(
        None, title="A priori distance bound h(B_0, B_1) / (1 - L) between start set and attractor."
    )


class TrajectoryResult(BaseModel):
    """Point sets of a forward or backward trajectory at requested depths."""

    model_config = _ARRAY_CONFIG

    direction: Literal["forward", "backward"] = Field(..., title="Trajectory direction.")
    depths: List[int] = Field(..., title="Requested depths, increasing.")
    sets: List[PointSet] = Field(..., title="Point set at each requested depth.")
    h_steps: List[float] = Field(..., title="Hausdorff distance between sets at consecutive requested depths.")
    epsilon: float = Field(..., title="Decimation cell size.")


class ProductDiagnostic(BaseModel):
    """Partial products and sums of per-level contraction factors."""

    factors: List[float] = Field(..., title="Per-level (or per-block) factors s_i.")
    partial_products: List[float] = Field(..., title="P_k = s_1 ... s_k.")
    partial_sums: List[float] = Field(..., title="Sum_k = P_1 + ... + P_k.")
    tail_ratio: float = Field(..., title="Geometric-mean ratio of the partial products over the last quarter.")
    tail_estimate: float = Field(..., title="Geometric estimate of the remaining sum.")
    classification: Literal["sum-converges", "product-to-zero", "inconclusive"] = Field(
        ..., title="Empirical classification."
    )
    empirical: bool = Field(True, title="The classification is a finite-horizon heuristic.")
    block_length: StrictInt = Field(1, title="Number of levels composed per factor.")


class ConvergenceEstimate(BaseModel):
    """Numerical evidence for uniform or Hausdorff convergence of subdivision."""

    max_differences: List[float] = Field(..., title="Max distance between consecutive points per level.")
    hausdorff_steps: List[float] = Field(..., title="h(p^k, p^{k+1}) for consecutive levels.")
    difference_ratios: List[float] = Field(..., title="Ratios of consecutive max differences.")
    hausdorff_ratios: List[float] = Field(..., title="Ratios of consecutive Hausdorff steps.")
    classification: Literal["c0-like", "h-like", "inconclusive"] = Field(..., title="Empirical classification.")


class WordLimit(BaseModel):
    """Approximation of the limit point along a finite index word."""

    model_config = _ARRAY_CONFIG

    point: numpy.ndarray = Field(..., title="Mean of the rows of the word product applied to p_0.")
    spread: float = Field(..., ge=0, title="Diameter of those rows.")
    parameter: float = Field(..., ge=0, le=1, title="Dyadic parameter of the word.")


class CompositionSearch(BaseModel):
    """Result of searching for a contractive composition length."""

    length: Optional[StrictInt] = Field(None, title="Smallest contractive length found.")
    factors: List[float] = Field(..., title="Maximal composite factor per tried length.")
    sampled: bool = Field(False, title="Whether some words were sampled instead of enumerated.")
    diagnostic: Optional[ProductDiagnostic] = Field(None, title="Product diagnostic of the accepted block factors.")


class DiagnoseReport(BaseModel):
    """Convergence report for a schedule over a finite horizon."""

    scheme: str = Field(..., title="Catalog reference of the schedule.")
    horizon: StrictInt = Field(..., title="Number of levels inspected.")
    level_factors: List[float] = Field(..., title="Contraction factor of every level.")
    product: ProductDiagnostic = Field(..., title="Diagnostic of the per-level factors.")
    composition: Optional[CompositionSearch] = Field(None, title="Composition length search for lifted schedules.")
    reproduces_constants: Optional[bool] = Field(None, title="Whether every inspected mask reproduces constants.")
    subdominant_radius: Optional[float] = Field(None, title="Largest subdominant slice eigenvalue modulus seen.")
    case: Literal["i", "ii", "iii", "none"] = Field(..., title="Convergence case.")
    empirical: bool = Field(True, title="The classification rests on a finite horizon.")


class CatalogEntry(BaseModel):
    """Named mask, mask sequence, function system or schedule."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    name: str = Field(..., title="Catalog name.")
    kind: Literal["mask", "mask_sequence", "function_system", "schedule"] = Field(..., title="Object kind.")
    description: str = Field(..., title="Human-readable description.")
    params: Dict[str, float] = Field(default_factory=dict, title="Parameters and their defaults.")
    seeded: bool = Field(False, title="Whether the entry accepts a seed.")
    builder: Callable[..., Any] = Field(..., title="Factory taking the parameters as keyword arguments.")


class ResolvedScheme(BaseModel):
    """A catalog reference turned into the objects the commands run on."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    reference: str = Field(..., title="Reference the scheme was resolved from.")
    kind: Literal["mask", "mask_sequence", "function_system", "schedule"] = Field(..., title="Object kind.")
    schedule: SfsSchedule = Field(..., title="Schedule driving trajectories.")
    initial: PointSet = Field(..., title="Default start set.")
    system: Optional[FunctionSystem] = Field(None, title="Function system, if the scheme is stationary.")
    masks: Optional[Any] = Field(None, title="Mask or mask sequence behind a lifted schedule.")
    lift: Optional[LiftMatrix] = Field(None, title="Lift of a lifted schedule.")
    maps_metadata: Dict[str, Any] = Field(default_factory=dict, title="Description of the maps used.")


class RunConfig(BaseModel):
    """Options of one command-line invocation, merged from flags and a config file."""

    model_config = ConfigDict(extra="forbid")

    command: Literal["attractor", "trajectory", "subdivide", "diagnose"] = Field(..., title="Command to run.")
    scheme: Optional[str] = Field(None, title="Catalog reference or descriptor path of a scheme or schedule.")
    input: Optional[str] = Field(None, title="Control polygon CSV for subdivision.")
    mask: Optional[str] = Field(None, title="Catalog mask, Laurent polynomial or mask descriptor path.")
    lift: Optional[str] = Field(None, title="Lift descriptor path replacing the default lift.")
    direction: Literal["forward", "backward"] = Field("backward", title="Trajectory direction.")
    depths: List[StrictInt] = Field(default_factory=list, title="Requested depths.")
    epsilon: Optional[float] = Field(None, ge=0, title="Decimation cell size, command default if not given.")
    tol: float = Field(1e-6, gt=0, title="Convergence tolerance.")
    max_iter: StrictInt = Field(100, gt=0, title="Iteration cap.")
    seed: Optional[StrictInt] = Field(None, title="Seed for randomized schemes.")
    horizon: StrictInt = Field(200, gt=0, title="Number of levels for diagnostics.")
    max_length: Optional[StrictInt] = Field(None, gt=0, title="Longest composition tried by diagnose.")
    output: str = Field(..., title="Output path; its stem names every artifact.")
    format: Literal["csv", "json", "svg"] = Field("csv", title="Point cloud format.")

    @field_validator("depths")
    @classmethod
    def _check_depths(cls, value: List[int]) -> List[int]:
        if any(d < 0 for d in value):
            raise ValueError("Depths must be nonnegative.")
        if any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError("Depths must be strictly increasing.")
        return value
