""" Lifting subdivision to function systems: slice matrices conjugated by a lift matrix act on rows x -> x L^-1 S_r L.
In the column convention of the function system code such a map is x -> (L^-1 S_r L)^T x.
"""

from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy

from ..utils import get_logger
from .constants import (
    CONSTANTS_TOLERANCE,
    LIFT_CACHE_SIZE,
    MAX_COMPOSITION_LENGTH,
    MAX_LIFT_CONDITION,
    MAX_SEQUENCE_COMPOSITION_LENGTH,
)
from .function_systems import product_diagnostic, spectral_norms
from .metric_sets import diameter
from .schemas import (
    AffineMap,
    BlockStructure,
    CompositionSearch,
    ConstantsNotReproducedError,
    DimensionMismatchError,
    FunctionSystem,
    InsufficientDataError,
    LiftedMap,
    LiftMatrix,
    Mask,
    PointSet,
    SfsSchedule,
    SingularLiftError,
    WordLimit,
)
from .subdivision import Masks, as_polygon, check_constant_reproduction, mask_at, slice_matrices, word_products

logger = get_logger(__name__)


def _check_condition(matrix: numpy.ndarray) -> None:
    condition = float(numpy.linalg.cond(matrix))
    if not numpy.isfinite(condition) or condition > MAX_LIFT_CONDITION:
        logger.warning("Rejecting lift matrix with condition number %.3g.", condition)
        raise SingularLiftError(
            f"Lift matrix is singular or ill-conditioned (condition number {condition:.3g}); "
            "control points may lie on a common hyperplane.",
            condition=condition,
        )


def build_p_matrix(p0: Sequence) -> LiftMatrix:
    """Lift matrix P with the control points in its first m columns, a shifted identity block in the middle columns
    and a last column of ones.
    p0 (Sequence): n control points in R^m with n > m + 1.
    RETURNS (LiftMatrix): Nonsingular P.
    """
    points = as_polygon(p0)
    n, m = points.shape
    if n <= m + 1:
        raise InsufficientDataError(f"Need more than {m + 1} control points in R^{m}, got {n}.")
    P = numpy.zeros((n, n))
    P[:, :m] = points
    P[:, -1] = 1.0
    for column in range(m, n - 1):
        P[column - m, column] = 1.0
    _check_condition(P)
    return LiftMatrix(matrix=P, kind="P", m=m)


def build_h_matrix(n: int) -> LiftMatrix:
    """Universal basis matrix H: identity with its last column replaced by ones.
    n (int): Size, at least 2.
    RETURNS (LiftMatrix): H.
    """
    if n < 2:
        raise ValueError(f"H needs size at least 2, got {n}.")
    H = numpy.eye(n)
    H[:, -1] = 1.0
    return LiftMatrix(matrix=H, kind="H", m=0)


def lift_from_matrix(matrix: Sequence, m: int) -> LiftMatrix:
    """Wrap a user supplied lift matrix after checking its conditioning.
    matrix (Sequence): n x n matrix with last column of ones.
    m (int): Number of leading columns holding control points.
    RETURNS (LiftMatrix): Validated lift.
    """
    array = numpy.asarray(matrix, dtype=float)
    if array.ndim != 2 or array.shape[0] != array.shape[1]:
        raise DimensionMismatchError(f"Lift matrix must be square, got shape {array.shape}.")
    _check_condition(array)
    return LiftMatrix(matrix=array, kind="P", m=m)


def lift(S_r: numpy.ndarray, L: LiftMatrix) -> LiftedMap:
    """Conjugate a slice matrix by the lift, M_r = L^-1 S_r L, via a linear solve.
    S_r (numpy.ndarray): n x n slice.
    L (LiftMatrix): Lift.
    RETURNS (LiftedMap): Lifted map.
    """
    S_r = numpy.asarray(S_r, dtype=float)
    if S_r.shape != L.matrix.shape:
        raise DimensionMismatchError(f"Slice of shape {S_r.shape} does not fit a lift of size {L.n}.")
    reproduces = bool(numpy.allclose(S_r.sum(axis=1), 1.0, rtol=0, atol=CONSTANTS_TOLERANCE))
    return LiftedMap(matrix=numpy.linalg.solve(L.matrix, S_r @ L.matrix), reproduces_constants=reproduces)


def block_structure(M: LiftedMap) -> BlockStructure:
    """Split M = [[G, 0], [v, 1]].
    M (LiftedMap): Lifted map of a constants-reproducing slice.
    RETURNS (BlockStructure): G, v and ||G||_2, the Lipschitz constant on the flat of rows with last entry one.
    """
    if not M.reproduces_constants:
        raise ConstantsNotReproducedError("Block structure needs a constants-reproducing slice.")
    G = M.matrix[:-1, :-1]
    return BlockStructure(G=G, v=M.matrix[-1, :-1], spectral_norm=float(spectral_norms(G)[0]))


def lifted_factor(M: LiftedMap) -> float:
    """Lipschitz constant of a lifted map: ||G||_2 on the flat if constants are reproduced, ||M||_2 otherwise.
    M (LiftedMap): Lifted map.
    RETURNS (float): Contraction factor.
    """
    if M.reproduces_constants:
        return block_structure(M).spectral_norm
    return float(spectral_norms(M.matrix)[0])


def lifted_system(lifted: Sequence[LiftedMap], label: Optional[str] = None) -> FunctionSystem:
    """Function system of lifted maps in column convention.
    lifted (Sequence[LiftedMap]): Lifted maps.
    label (Optional[str]): Label.
    RETURNS (FunctionSystem): Maps x -> M^T x.
    """
    return FunctionSystem(maps=[AffineMap.linear(M.matrix.T) for M in lifted], label=label)


def sfs_from_subdivision(masks: Masks, L: LiftMatrix, n: Optional[int] = None) -> SfsSchedule:
    """Schedule k -> {x -> (M_1^[k])^T x, x -> (M_2^[k])^T x} of lifted level-k slices.
    masks (Masks): Mask or mask sequence.
    L (LiftMatrix): Lift of size n.
    n (Optional[int]): Slice size, defaults to the size of L.
    RETURNS (SfsSchedule): Lifted schedule on R^n with per-level contraction factors.
    """
    n = L.n if n is None else n
    if n != L.n:
        raise DimensionMismatchError(f"Slice size {n} does not match lift size {L.n}.")

    @lru_cache(maxsize=LIFT_CACHE_SIZE)
    def level(k: int) -> Tuple[LiftedMap, LiftedMap]:
        slices = slice_matrices(mask_at(masks, k), n)
        return lift(slices.S1, L), lift(slices.S2, L)

    # validates the first level eagerly
    level(1)
    description = getattr(masks, "description", "") or "stationary"
    return SfsSchedule(
        generator=lambda k: lifted_system(level(k), label=f"lifted level {k}"),
        dim=n,
        description=f"lifted {description} subdivision, n={n}",
        factor=lambda k: max(lifted_factor(M) for M in level(k)),
        projection_dim=L.m if L.kind == "P" else None,
    )


def conjugate_to_plane(lifted: Sequence[LiftedMap], m: int) -> FunctionSystem:
    """Restrict lifted maps to rows (y, 0, ..., 0, 1) with y in R^m and read off the first m coordinates of the image.
    With a P lift whose middle columns occupy the first rows, this is the affine map taking the last m + 1 control
    points to the last m + 1 refined points.
    lifted (Sequence[LiftedMap]): Lifted maps.
    m (int): Dimension of the control points.
    RETURNS (FunctionSystem): Affine maps y -> M[:m, :m]^T y + M[-1, :m] on R^m.
    """
    return FunctionSystem(
        maps=[AffineMap(A=M.matrix[:m, :m].T, b=M.matrix[-1, :m]) for M in lifted],
        label="planar conjugate",
    )


def _check_word(word: Sequence[int]) -> List[int]:
    digits = [int(i) for i in word]
    if any(i not in (1, 2) for i in digits):
        raise ValueError(f"Word digits must be 1 or 2, got {digits}.")
    return digits


def word_parameter(word: Sequence[int]) -> float:
    """Dyadic parameter sum_k (i_k - 1) 2^-k of a finite word.
    word (Sequence[int]): Digits in {1, 2}.
    RETURNS (float): Parameter in [0, 1).
    """
    return float(sum((i - 1) * 2.0 ** -k for k, i in enumerate(_check_word(word), start=1)))


def word_limit(
    masks: Masks, word: Sequence[int], L: LiftMatrix, p0: Optional[Sequence] = None
) -> WordLimit:
    """Apply S^[K]_{i_K} ... S^[1]_{i_1} to p0. For convergent schemes all rows approach one limit point.
    masks (Masks): Mask or mask sequence.
    word (Sequence[int]): Digits i_1 ... i_K in {1, 2}, K >= 1.
    L (LiftMatrix): Lift fixing the slice size.
    p0 (Optional[Sequence]): Control points, defaults to those embedded in L.
    RETURNS (WordLimit): Mean row, row spread and dyadic parameter.
    """
    digits = _check_word(word)
    if not digits:
        raise ValueError("Word must have at least one digit.")
    X = L.control_points if p0 is None else as_polygon(p0)
    if X.shape[0] != L.n or X.shape[1] == 0:
        raise DimensionMismatchError(f"Need {L.n} control points, got shape {X.shape}.")
    for k, r in enumerate(digits, start=1):
        X = slice_matrices(mask_at(masks, k), L.n)[r] @ X
    return WordLimit(
        point=X.mean(axis=0),
        spread=diameter(PointSet(points=X)),
        parameter=word_parameter(digits),
    )


def project(A: PointSet, m: int) -> PointSet:
    """Keep the first m coordinates.
    A (PointSet): Lifted points.
    m (int): Target dimension.
    RETURNS (PointSet): Projected points without duplicates.
    """
    if not 1 <= m <= A.dim:
        raise DimensionMismatchError(f"Cannot project R^{A.dim} onto its first {m} coordinates.")
    return PointSet(points=A.points[:, :m]).unique()


def attractor_from_basis(Hinf: PointSet, H: LiftMatrix, p0: Sequence) -> PointSet:
    """Map points of the basis attractor to the limit set of a control polygon, p_inf = H_inf H^-1 p0.
    Hinf (PointSet): Rows of the basis attractor in R^n.
    H (LiftMatrix): Basis matrix of size n.
    p0 (Sequence): n control points.
    RETURNS (PointSet): Points in R^m.
    """
    points = as_polygon(p0)
    if Hinf.dim != H.n or points.shape[0] != H.n:
        raise DimensionMismatchError(
            f"Basis attractor in R^{Hinf.dim} and {points.shape[0]} control points do not fit H of size {H.n}."
        )
    return PointSet(points=Hinf.points @ numpy.linalg.solve(H.matrix, points)).unique()


def block_factors(masks: Masks, L: LiftMatrix, length: int, horizon: int) -> Tuple[List[float], bool]:
    """Contraction factors of consecutive blocks of `length` levels: for each block the largest ||G_eta||_2 over
    words eta, where G_eta is the leading block of L^-1 S^[end]_{i} ... S^[start]_{i} L. Without constant
    reproduction the full lifted norm is used.
    masks (Masks): Mask or mask sequence.
    L (LiftMatrix): Lift.
    length (int): Levels per block.
    horizon (int): Number of levels covered.
    RETURNS (Tuple[List[float], bool]): Factors per block and whether words were sampled.
    """
    factors: List[float] = []
    sampled = False
    for start in range(0, horizon - length + 1, length):
        levels = range(start + 1, start + length + 1)
        reproduces = all(check_constant_reproduction(mask_at(masks, k)).reproduces for k in levels)
        products, block_sampled = word_products(masks, L.n, levels)
        sampled = sampled or block_sampled
        lifted = numpy.linalg.solve(L.matrix, products @ L.matrix)
        blocks = lifted[:, :-1, :-1] if reproduces else lifted
        factors.append(float(spectral_norms(blocks).max()))
    return factors, sampled


def composition_search(
    masks: Masks,
    L: LiftMatrix,
    horizon: int = 200,
    max_length: Optional[int] = None,
) -> CompositionSearch:
    """Find the smallest composition length whose block factors certify backward convergence: a factor below one for
    a single mask, a converging sum of block products for a mask sequence.
    masks (Masks): Mask or mask sequence.
    L (LiftMatrix): Lift.
    horizon (int): Levels inspected for mask sequences.
    max_length (Optional[int]): Longest composition tried. Defaults to MAX_COMPOSITION_LENGTH for a single mask and
        MAX_SEQUENCE_COMPOSITION_LENGTH for a mask sequence, whose longer blocks are built from sampled words.
    RETURNS (CompositionSearch): Length found (if any) with the factors tried.
    """
    stationary = isinstance(masks, Mask)
    if max_length is None:
        max_length = MAX_COMPOSITION_LENGTH if stationary else MAX_SEQUENCE_COMPOSITION_LENGTH
    tried: List[float] = []
    sampled = False
    for length in range(1, max_length + 1):
        factors, block_sampled = block_factors(masks, L, length, length if stationary else horizon)
        if not factors:
            break
        sampled = sampled or block_sampled
        tried.append(max(factors))
        if stationary and factors[0] < 1:
            return CompositionSearch(length=length, factors=tried, sampled=sampled)
        if not stationary:
            diagnostic = product_diagnostic(factors, block_length=length)
            if diagnostic.classification == "sum-converges":
                return CompositionSearch(length=length, factors=tried, sampled=sampled, diagnostic=diagnostic)
    logger.warning("No contractive composition up to length %d.", max_length)
    return CompositionSearch(length=None, factors=tried, sampled=sampled)
