""" Binary univariate subdivision: refinement with a mask, the slice matrices S_1 / S_2 and convergence estimates.
Data are finite. Only output points whose whole stencil lies inside the given data are kept.
"""

from typing import List, Sequence, Tuple, Union

import numpy

from ..utils import get_logger
from .constants import CONSTANTS_TOLERANCE, GEOMETRIC_DECAY_RATIO, MAX_ENUMERATED_WORDS, WORD_SAMPLE_SEED
from .metric_sets import hausdorff
from .schemas import (
    ConstantsReproduction,
    ConvergenceEstimate,
    InsufficientDataError,
    Mask,
    MaskSequence,
    PointSet,
    SliceMatrices,
)

logger = get_logger(__name__)

Masks = Union[Mask, MaskSequence]


def as_polygon(p: Sequence) -> numpy.ndarray:
    """Control points as an (N, m) float array. A flat sequence is read as N points in R^1.
    p (Sequence): Points.
    RETURNS (numpy.ndarray): (N, m) array.
    """
    array = numpy.array(p, dtype=float)
    if array.ndim == 1:
        array = array.reshape(-1, 1)
    if array.ndim != 2 or array.shape[0] == 0 or array.shape[1] == 0:
        raise ValueError(f"Control points must form a nonempty (N, m) array, got shape {array.shape}.")
    if not numpy.all(numpy.isfinite(array)):
        raise ValueError("Control points must be finite.")
    return array


def mask_at(masks: Masks, k: int) -> Mask:
    """Mask used at level k; a single mask is used at every level.
    masks (Masks): Mask or mask sequence.
    k (int): Level, at least 1.
    RETURNS (Mask): a^[k].
    """
    return masks if isinstance(masks, Mask) else masks.mask(k)


def constant_mask_sequence(mask: Mask) -> MaskSequence:
    """Stationary mask sequence a^[k] = mask.
    mask (Mask): Mask.
    RETURNS (MaskSequence): Constant sequence with limit mask.
    """
    return MaskSequence(
        generator=lambda k: mask,
        support_size=mask.support_size,
        description="stationary",
        limit=mask,
    )


def non_reproducing_perturbation(mask: Mask, first: Mask) -> MaskSequence:
    """Sequence using `first` at level 1 and `mask` at every later level. With a `first` that does not reproduce
    constants, the forward limit moves away from the attractor of the stationary scheme.
    mask (Mask): Mask of levels 2, 3, ...
    first (Mask): Mask of level 1, same support size as mask.
    RETURNS (MaskSequence): Perturbed sequence with limit mask.
    """
    if first.support_size != mask.support_size:
        raise ValueError(
            f"Level-1 mask has support size {first.support_size}, expected {mask.support_size}."
        )
    return MaskSequence(
        generator=lambda k: first if k == 1 else mask,
        support_size=mask.support_size,
        description="perturbed at level 1",
        limit=mask,
    )

def refinement_matrix(mask: Mask, N: int) -> numpy.ndarray:
    """Rows (a_{i-2j})_j of the refinement operator for all outputs i whose stencil is inside data of length N.
    mask (Mask): Mask.
    N (int): Number of data points.
    RETURNS (numpy.ndarray): (rows, N) matrix, possibly with zero rows.
    """
    lo, hi = mask.support
    rows: List[numpy.ndarray] = []
    for i in range(lo, 2 * (N - 1) + hi + 1):
        j_lo, j_hi = -((hi - i) // 2), (i - lo) // 2
        if j_lo > j_hi or j_lo < 0 or j_hi > N - 1:
            continue
        row = numpy.zeros(N)
        for j in range(j_lo, j_hi + 1):
            row[j] = mask.coefficient(i - 2 * j)
        rows.append(row)
    return numpy.array(rows).reshape(len(rows), N)


def refine(mask: Mask, p: Sequence) -> numpy.ndarray:
    """One step p_i^{k+1} = sum_j a_{i-2j} p_j^k of binary subdivision.
    mask (Mask): Mask.
    p (Sequence): (N, m) control points.
    RETURNS (numpy.ndarray): Refined points with fully supported stencils.
    """
    points = as_polygon(p)
    R = refinement_matrix(mask, len(points))
    if R.shape[0] == 0:
        raise InsufficientDataError(
            f"{len(points)} points are too few for a mask of support size {mask.support_size}."
        )
    return R @ points


def check_constant_reproduction(mask: Mask) -> ConstantsReproduction:
    """Check sum_j a_{2j} = sum_j a_{2j+1} = 1, i.e. that the scheme maps constant data to itself.
    mask (Mask): Mask.
    RETURNS (ConstantsReproduction): Flag and both parity sums.
    """
    indices = numpy.arange(mask.support[0], mask.support[1] + 1)
    even_sum = float(mask.coeffs[indices % 2 == 0].sum())
    odd_sum = float(mask.coeffs[indices % 2 == 1].sum())
    return ConstantsReproduction(
        reproduces=abs(even_sum - 1) <= CONSTANTS_TOLERANCE and abs(odd_sum - 1) <= CONSTANTS_TOLERANCE,
        even_sum=even_sum,
        odd_sum=odd_sum,
    )


def slice_matrices(mask: Mask, n: int) -> SliceMatrices:
    """Slices S_1, S_2 mapping n control points to the first and the last n refined points.
    mask (Mask): Mask.
    n (int): Slice size, larger than half the support size plus one.
    RETURNS (SliceMatrices): Both slices.
    """
    if n <= mask.ell + 1:
        raise InsufficientDataError(
            f"Slice size {n} must exceed {mask.ell + 1} for a mask of support size {mask.support_size}."
        )
    R = refinement_matrix(mask, n)
    if R.shape[0] < n:
        raise InsufficientDataError(
            f"Only {R.shape[0]} fully supported rows for slice size {n}."
        )
    return SliceMatrices(
        S1=R[:n],
        S2=R[-n:],
        n=n,
        parity="odd" if mask.support_size % 2 else "even",
    )


def slice_eigenvalues(S: numpy.ndarray) -> numpy.ndarray:
    """Eigenvalue moduli of a slice matrix in decreasing order.
    S (numpy.ndarray): Square matrix.
    RETURNS (numpy.ndarray): Sorted moduli.
    """
    return numpy.sort(numpy.abs(numpy.linalg.eigvals(S)))[::-1]


def subdominant_radius(slices: SliceMatrices) -> float:
    """Largest eigenvalue modulus of S_1 and S_2 once the eigenvalue 1 of constant reproduction is removed.
    slices (SliceMatrices): Slices of a constants-reproducing mask.
    RETURNS (float): Subdominant spectral radius.
    """
    radius = 0.0
    for S in (slices.S1, slices.S2):
        eigenvalues = numpy.linalg.eigvals(S)
        unit = int(numpy.argmin(numpy.abs(eigenvalues - 1)))
        rest = numpy.delete(eigenvalues, unit)
        if rest.size:
            radius = max(radius, float(numpy.abs(rest).max()))
    return radius


def subdivide_levels(masks: Masks, p0: Sequence, K: int) -> numpy.ndarray:
    """Refine p0 with a^[1], then a^[2], ... up to level K.
    masks (Masks): Mask or mask sequence.
    p0 (Sequence): Control points.
    K (int): Number of levels.
    RETURNS (numpy.ndarray): Level-K points.
    """
    if K < 0:
        raise ValueError(f"Depth must be nonnegative, got {K}.")
    p = as_polygon(p0)
    for k in range(1, K + 1):
        p = refine(mask_at(masks, k), p)
    return p


def word_products(
    masks: Masks,
    n: int,
    levels: Sequence[int],
    forward: bool = False,
    max_words: int = MAX_ENUMERATED_WORDS,
) -> Tuple[numpy.ndarray, bool]:
    """Products of slice matrices over all binary words for the given levels. Backward products put the last level
    leftmost (S^[K] ... S^[1]), forward products the first (S^[1] ... S^[K]). Beyond max_words, words are sampled with
    a fixed seed.
    masks (Masks): Mask or mask sequence.
    n (int): Slice size.
    levels (Sequence[int]): Levels in increasing order.
    forward (bool): Product order.
    max_words (int): Enumeration cap.
    RETURNS (Tuple[numpy.ndarray, bool]): (words, n, n) stack and whether words were sampled.
    """
    levels = list(levels)
    slices = [slice_matrices(mask_at(masks, k), n) for k in levels]
    if 2 ** len(levels) <= max_words:
        products = numpy.eye(n)[None]
        for s in slices:
            pair = numpy.stack([s.S1, s.S2])[:, None]
            products = (products[None] @ pair if forward else pair @ products[None]).reshape(-1, n, n)
        return products, False

    logger.debug(
        "Sampling %d of 2^%d words over levels %d..%d.", max_words, len(levels), levels[0], levels[-1]
    )
    words = numpy.random.default_rng(WORD_SAMPLE_SEED).integers(0, 2, size=(max_words, len(levels)))
    products = numpy.broadcast_to(numpy.eye(n), (max_words, n, n))
    for column, s in enumerate(slices):
        chosen = numpy.stack([s.S1, s.S2])[words[:, column]]
        products = products @ chosen if forward else chosen @ products
    return products, True


def slice_product_union(masks: Masks, p0: Sequence, K: int, forward: bool = False) -> PointSet:
    """Union over all words of the rows of S^[K]_{i_K} ... S^[1]_{i_1} p0 (or the forward order).
    masks (Masks): Mask or mask sequence.
    p0 (Sequence): n control points.
    K (int): Depth, at least 1.
    forward (bool): Product order.
    RETURNS (PointSet): Deduplicated rows.
    """
    points = as_polygon(p0)
    products, _ = word_products(masks, len(points), range(1, K + 1), forward=forward)
    return PointSet(points=numpy.unique((products @ points).reshape(-1, points.shape[1]), axis=0))


def _ratios(values: Sequence[float]) -> List[float]:
    return [b / a for a, b in zip(values, values[1:]) if a > 0]


def _decays(ratios: List[float]) -> bool:
    late = ratios[len(ratios) // 2 :]
    return bool(late) and float(numpy.mean(late)) < GEOMETRIC_DECAY_RATIO


def c0_convergence_estimate(masks: Masks, p0: Sequence, K: int) -> ConvergenceEstimate:
    """Track max adjacent differences and Hausdorff steps over K levels of subdivision.
    masks (Masks): Mask or mask sequence.
    p0 (Sequence): Control points.
    K (int): Number of levels, at least 2.
    RETURNS (ConvergenceEstimate): Sequences, ratios and an empirical classification.
    """
    if K < 2:
        raise ValueError(f"Need at least two levels, got {K}.")
    levels = [as_polygon(p0)]
    for k in range(1, K + 1):
        levels.append(refine(mask_at(masks, k), levels[-1]))

    differences = [
        float(numpy.linalg.norm(numpy.diff(p, axis=0), axis=1).max()) if len(p) > 1 else 0.0
        for p in levels
    ]
    steps = [hausdorff(PointSet(points=a), PointSet(points=b)) for a, b in zip(levels, levels[1:])]
    difference_ratios, step_ratios = _ratios(differences), _ratios(steps)

    if _decays(difference_ratios) and differences[-1] < differences[0]:
        classification = "c0-like"
    elif all(s > 0 for s in steps) and _decays(step_ratios):
        classification = "h-like"
    else:
        classification = "inconclusive"

    return ConvergenceEstimate(
        max_differences=differences,
        hausdorff_steps=steps,
        difference_ratios=difference_ratios,
        hausdorff_ratios=step_ratios,
        classification=classification,
    )
