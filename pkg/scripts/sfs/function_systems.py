""" Iterated function systems, their non-stationary sequences and the contraction bookkeeping around them. """

from typing import Iterable, List, Optional, Sequence

import numpy
import tqdm

from ..utils import get_logger
from .constants import (
    DEFAULT_EPSILON,
    MAX_ENUMERATED_WORDS,
    POWER_ITERATION_MAX_ITER,
    POWER_ITERATION_TOL,
    PRODUCT_TO_ZERO_TOLERANCE,
    TAIL_TOLERANCE,
    WORD_SAMPLE_SEED,
)
from .metric_sets import decimate, hausdorff
from .schemas import (
    AffineMap,
    AttractorResult,
    DimensionMismatchError,
    FunctionSystem,
    InvariantBall,
    NonContractiveError,
    PointSet,
    ProductDiagnostic,
    SfsSchedule,
    TrajectoryResult,
)

logger = get_logger(__name__)


def spectral_norms(
    matrices: numpy.ndarray,
    tol: float = POWER_ITERATION_TOL,
    max_iter: int = POWER_ITERATION_MAX_ITER,
    seed: int = 0,
) -> numpy.ndarray:
    """Spectral norms of a stack of matrices by power iteration on A^T A, run for the whole stack at once.
    matrices (numpy.ndarray): (N, r, c) stack or a single (r, c) matrix.
    tol (float): Relative tolerance on the dominant eigenvalue of A^T A.
    max_iter (int): Iteration cap.
    seed (int): Seed of the start vectors.
    RETURNS (numpy.ndarray): N spectral norms.
    """
    stack = numpy.asarray(matrices, dtype=float)
    if stack.ndim == 2:
        stack = stack[None]
    grams = numpy.einsum("nji,njk->nik", stack, stack)
    count, size = grams.shape[0], grams.shape[2]
    estimates = numpy.zeros(count)
    rng = numpy.random.default_rng(seed)
    x = rng.normal(size=(count, size))
    x /= numpy.linalg.norm(x, axis=1, keepdims=True)
    active = numpy.any(grams != 0, axis=(1, 2))

    for _ in range(max_iter):
        idx = numpy.flatnonzero(active)
        if idx.size == 0:
            break
        y = numpy.einsum("nik,nk->ni", grams[idx], x[idx])
        y_norm = numpy.linalg.norm(y, axis=1)
        stalled = y_norm == 0
        if stalled.any():
            # start vector fell into the null space
            restart = idx[stalled]
            x[restart] = rng.normal(size=(restart.size, size))
            x[restart] /= numpy.linalg.norm(x[restart], axis=1, keepdims=True)
        moving, new = idx[~stalled], y_norm[~stalled]
        done = numpy.abs(new - estimates[moving]) <= tol * new
        estimates[moving] = new
        x[moving] = y[~stalled] / new[:, None]
        active[moving[done]] = False
    else:
        logger.warning(
            "Power iteration did not converge for %d of %d matrices.",
            int(active.sum()),
            count,
        )

    return numpy.sqrt(estimates)


def lipschitz(f: AffineMap) -> float:
    """Lipschitz constant of an affine map, i.e. the spectral norm of its linear part.
    f (AffineMap): Map.
    RETURNS (float): ||A||_2.
    """
    return float(spectral_norms(f.A)[0])


def contraction_factor(F: FunctionSystem) -> float:
    """Contraction factor of a function system.
    F (FunctionSystem): System.
    RETURNS (float): Largest Lipschitz constant among the maps.
    """
    return float(spectral_norms(numpy.stack([f.A for f in F.maps])).max())


def composition_factor(F: FunctionSystem, length: int) -> float:
    """Largest Lipschitz constant among all compositions of `length` maps of F. Words are enumerated up to
    MAX_ENUMERATED_WORDS and sampled with a fixed seed beyond.
    F (FunctionSystem): System.
    length (int): Composition length, at least 1.
    RETURNS (float): max ||A_{i_1} ... A_{i_length}||_2.
    """
    if length < 1:
        raise ValueError(f"Composition length must be positive, got {length}.")
    linear = numpy.stack([f.A for f in F.maps])
    if len(F) ** length <= MAX_ENUMERATED_WORDS:
        products = linear
        for _ in range(length - 1):
            products = numpy.einsum("aij,bjk->abik", linear, products).reshape(
                -1, F.dim, F.dim
            )
    else:
        logger.info(
            "Sampling %d of %d words of length %d.",
            MAX_ENUMERATED_WORDS,
            len(F) ** length,
            length,
        )
        words = numpy.random.default_rng(WORD_SAMPLE_SEED).integers(
            0, len(F), size=(MAX_ENUMERATED_WORDS, length)
        )
        products = linear[words[:, 0]]
        for column in range(1, length):
            products = products @ linear[words[:, column]]
    return float(spectral_norms(products).max())


def hutchinson_apply(F: FunctionSystem, B: PointSet, eps: float = 0.0) -> PointSet:
    """Apply the Hutchinson operator B -> union of f(B) over f in F.
    F (FunctionSystem): System.
    B (PointSet): Current set.
    eps (float): Decimation cell size, 0 to keep every distinct point.
    RETURNS (PointSet): Image set without exact duplicates, thinned if eps > 0.
    """
    if F.dim != B.dim:
        raise DimensionMismatchError(
            f"A {F.dim}-dimensional system cannot act on points in R^{B.dim}."
        )
    if eps < 0:
        raise ValueError(f"Decimation cell size must be nonnegative, got {eps}.")
    images = numpy.vstack([f.apply(B.points) for f in F.maps])
    result = PointSet(points=numpy.unique(images, axis=0))
    return decimate(result, eps) if eps > 0 else result


def theorem_error_bound(L: float, h0: float) -> float:
    """A priori bound h(B_0, attractor) <= h(B_0, W(B_0)) / (1 - L).
    L (float): Contraction factor, below one.
    h0 (float): Distance of the first Hutchinson step.
    RETURNS (float): Bound on the distance between B_0 and the attractor.
    """
    if L >= 1:
        raise NonContractiveError(f"Contraction factor {L:.6g} is not below one.")
    return h0 / (1 - L)


def ifs_attractor(
    F: FunctionSystem,
    B0: PointSet,
    tol: float = 1e-6,
    max_iter: int = 100,
    eps: float = 0.0,
    composition_length: Optional[int] = None,
    show_progress: bool = False,
) -> AttractorResult:
    """Approximate the attractor of F by iterating the Hutchinson operator from B0 until consecutive iterates are
    within tol of each other.
    F (FunctionSystem): System.
    B0 (PointSet): Start set.
    tol (float): Stop once h(B_k, B_{k+1}) < tol.
    max_iter (int): Iteration cap.
    eps (float): Decimation cell size.
    composition_length (Optional[int]): Length of a composition the caller asserts to be contractive, required if F
        itself is not.
    show_progress (bool): Whether to show a progress bar.
    RETURNS (AttractorResult): Final iterate and convergence diagnostics.
    """
    if max_iter < 1:
        raise ValueError(f"Iteration cap must be positive, got {max_iter}.")
    L = contraction_factor(F)
    if L >= 1 and composition_length is None:
        raise NonContractiveError(
            f"Contraction factor {L:.6g} is not below one and no contractive composition length was given."
        )
    if L >= 1:
        logger.info(
            "Contraction factor %.6g, relying on asserted composition length %d.",
            L,
            composition_length,
        )

    B = B0
    h_steps: List[float] = []
    converged = False
    with tqdm.tqdm(
        desc="Iterating Hutchinson operator", leave=True, disable=not show_progress
    ) as pbar:
        for _ in range(max_iter):
            B_next = hutchinson_apply(F, B, eps)
            h_steps.append(hausdorff(B, B_next))
            B = B_next
            pbar.update(1)
            if h_steps[-1] < tol:
                converged = True
                break

    if not converged:
        logger.warning(
            "No convergence after %d iterations, last step %.3g.", max_iter, h_steps[-1]
        )

    return AttractorResult(
        points=B,
        iterations=len(h_steps),
        h_steps=h_steps,
        converged=converged,
        contraction_factor=L,
        composition_length=composition_length or 1,
        error_bound=theorem_error_bound(L, h_steps[0]) if L < 1 else None,
    )


def _check_depths(depths: Sequence[int]) -> List[int]:
    depths = list(depths)
    if not depths:
        raise ValueError("At least one depth is required.")
    if any(d < 0 for d in depths) or any(b <= a for a, b in zip(depths, depths[1:])):
        raise ValueError(f"Depths must be nonnegative and strictly increasing, got {depths}.")
    return depths


def _h_steps(sets: List[PointSet]) -> List[float]:
    return [hausdorff(a, b) for a, b in zip(sets, sets[1:])]


def forward_trajectory(
    schedule: SfsSchedule,
    A: PointSet,
    depths: Iterable[int],
    eps: float = DEFAULT_EPSILON,
    show_progress: bool = False,
) -> TrajectoryResult:
    """Forward trajectory Phi_K = W_K o ... o W_1 (A) at the requested depths.
    schedule (SfsSchedule): Function systems F_1, F_2, ...
    A (PointSet): Start set.
    depths (Iterable[int]): Strictly increasing depths.
    eps (float): Decimation cell size applied after every step.
    show_progress (bool): Whether to show a progress bar.
    RETURNS (TrajectoryResult): Sets at each depth and the Hausdorff steps between them.
    """
    depths = _check_depths(depths)
    B = A
    sets: List[PointSet] = []
    wanted = set(depths)
    if 0 in wanted:
        sets.append(A)
    with tqdm.tqdm(
        desc="Forward trajectory",
        total=depths[-1],
        leave=True,
        disable=not show_progress,
    ) as pbar:
        for k in range(1, depths[-1] + 1):
            B = hutchinson_apply(schedule.system(k), B, eps)
            if k in wanted:
                sets.append(B)
            pbar.update(1)
    logger.debug("Forward trajectory ends with %d points.", len(B))
    return TrajectoryResult(
        direction="forward", depths=depths, sets=sets, h_steps=_h_steps(sets), epsilon=eps
    )


def backward_trajectory(
    schedule: SfsSchedule,
    A: PointSet,
    depths: Iterable[int],
    eps: float = DEFAULT_EPSILON,
    show_progress: bool = False,
) -> TrajectoryResult:
    """Backward trajectory Psi_K = W_1 o ... o W_K (A) at the requested depths. Every depth is computed from scratch,
    since the innermost map changes with K.
    schedule (SfsSchedule): Function systems F_1, F_2, ...
    A (PointSet): Start set.
    depths (Iterable[int]): Strictly increasing depths.
    eps (float): Decimation cell size applied after every step.
    show_progress (bool): Whether to show a progress bar.
    RETURNS (TrajectoryResult): Sets at each depth and the Hausdorff steps between them.
    """
    depths = _check_depths(depths)
    sets: List[PointSet] = []
    with tqdm.tqdm(
        desc="Backward trajectory",
        total=len(depths),
        leave=True,
        disable=not show_progress,
    ) as pbar:
        for K in depths:
            B = A
            for k in range(K, 0, -1):
                B = hutchinson_apply(schedule.system(k), B, eps)
            sets.append(B)
            pbar.update(1)
    return TrajectoryResult(
        direction="backward", depths=depths, sets=sets, h_steps=_h_steps(sets), epsilon=eps
    )


def invariant_ball(q: Sequence[float], mu: float, M: float) -> InvariantBall:
    """Ball around q of radius M / (1 - mu), mapped into itself by every mu-contraction f with |f(q) - q| <= M.
    q (Sequence[float]): Center.
    mu (float): Common contraction bound, in [0, 1).
    M (float): Bound on |f(q) - q|, nonnegative.
    RETURNS (InvariantBall): The ball.
    """
    if mu >= 1:
        raise NonContractiveError(f"Contraction bound {mu:.6g} is not below one.")
    if mu < 0 or M < 0:
        raise ValueError("Contraction bound and displacement must be nonnegative.")
    return InvariantBall(center=q, radius=M / (1 - mu), mu=mu, M=M)


def invariant_ball_for(F: FunctionSystem, q: Optional[Sequence[float]] = None) -> InvariantBall:
    """Invariant ball of a contractive function system.
    F (FunctionSystem): System.
    q (Optional[Sequence[float]]): Center, the origin if not given.
    RETURNS (InvariantBall): Ball containing the attractor of F.
    """
    center = numpy.zeros(F.dim) if q is None else numpy.asarray(q, dtype=float)
    displacement = max(
        float(numpy.linalg.norm(f.apply(center[None])[0] - center)) for f in F.maps
    )
    return invariant_ball(center, contraction_factor(F), displacement)


def similarity_bound(s: Iterable[float], d_xy: float) -> float:
    """Bound (s_1 ... s_K) * |x - y| on the distance of the images of x and y under a composition of maps with
    Lipschitz constants s_i.
    s (Iterable[float]): Lipschitz constants.
    d_xy (float): Distance of the two points.
    RETURNS (float): Bound.
    """
    return float(numpy.prod(numpy.asarray(list(s), dtype=float))) * d_xy


def product_diagnostic(
    s: Iterable[float],
    product_tol: float = PRODUCT_TO_ZERO_TOLERANCE,
    tail_tol: float = TAIL_TOLERANCE,
    block_length: int = 1,
) -> ProductDiagnostic:
    """Partial products and sums of contraction factors with an empirical classification. The tail ratio is the
    geometric mean growth of the partial products over the last quarter of the horizon. The sum is classified as
    converging if that ratio is below one and the geometric tail estimate is small next to the partial sum.
    s (Iterable[float]): Nonnegative factors.
    product_tol (float): Final partial product below which the product counts as tending to zero.
    tail_tol (float): Largest accepted ratio of tail estimate to partial sum.
    block_length (int): Number of levels each factor covers, recorded for reporting.
    RETURNS (ProductDiagnostic): Partial products, sums and classification.
    """
    factors = numpy.asarray(list(s), dtype=float)
    if factors.size == 0:
        raise ValueError("At least one factor is required.")
    if numpy.any(factors < 0) or not numpy.all(numpy.isfinite(factors)):
        raise ValueError("Factors must be finite and nonnegative.")

    products = numpy.cumprod(factors)
    sums = numpy.cumsum(products)
    q = max(1, factors.size // 4)
    with numpy.errstate(divide="ignore", invalid="ignore"):
        log_products = numpy.concatenate([[0.0], numpy.cumsum(numpy.log(factors))])
        ratio = float(numpy.exp((log_products[-1] - log_products[-1 - q]) / q))
    if numpy.isnan(ratio):
        ratio = 0.0
    tail = float(products[-1] * ratio / (1 - ratio)) if ratio < 1 else float("inf")

    if ratio < 1 and tail <= tail_tol * sums[-1]:
        classification = "sum-converges"
    elif products[-1] <= product_tol:
        classification = "product-to-zero"
    else:
        classification = "inconclusive"

    return ProductDiagnostic(
        factors=factors.tolist(),
        partial_products=products.tolist(),
        partial_sums=sums.tolist(),
        tail_ratio=ratio,
        tail_estimate=tail,
        classification=classification,
        block_length=block_length,
    )


def constant_schedule(F: FunctionSystem) -> SfsSchedule:
    """Schedule repeating one function system at every level.
    F (FunctionSystem): System.
    RETURNS (SfsSchedule): k -> F.
    """
    return SfsSchedule(
        generator=lambda k: F,
        dim=F.dim,
        description=f"constant {F.label or 'function system'}",
    )


def periodic_schedule(
    systems: Sequence[FunctionSystem], block_lengths: Sequence[int]
) -> SfsSchedule:
    """Schedule cycling through systems, using systems[i] for block_lengths[i] consecutive levels.
    systems (Sequence[FunctionSystem]): Systems of common dimension.
    block_lengths (Sequence[int]): Positive block lengths, one per system.
    RETURNS (SfsSchedule): The periodic schedule.
    """
    systems, block_lengths = list(systems), list(block_lengths)
    if not systems or len(systems) != len(block_lengths):
        raise ValueError("Need one positive block length per system.")
    if any(b < 1 for b in block_lengths):
        raise ValueError(f"Block lengths must be positive, got {block_lengths}.")
    if len({F.dim for F in systems}) != 1:
        raise DimensionMismatchError("Periodic schedules need systems of common dimension.")
    owners = [F for F, b in zip(systems, block_lengths) for _ in range(b)]

    return SfsSchedule(
        generator=lambda k: owners[(k - 1) % len(owners)],
        dim=systems[0].dim,
        description="periodic "
        + ", ".join(f"{F.label or 'system'} x{b}" for F, b in zip(systems, block_lengths)),
    )
