""" Finite point sets as stand-ins for compact sets, and the Hausdorff metric on them. """

from typing import Iterable

import numpy
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist, pdist

from ..utils import get_thread_count
from .constants import DENSE_DISTANCE_LIMIT, SET_TOLERANCE
from .schemas import DimensionMismatchError, PointSet


def _check_dims(B: PointSet, C: PointSet) -> None:
    if B.dim != C.dim:
        raise DimensionMismatchError(
            f"Point sets live in R^{B.dim} and R^{C.dim}."
        )


def nearest_distances(X: numpy.ndarray, Y: numpy.ndarray) -> numpy.ndarray:
    """Distance from each row of X to the closest row of Y. Exact in both branches: small inputs use the dense
    distance matrix, larger ones an exact k-d tree query.
    X (numpy.ndarray): (N, m) query points.
    Y (numpy.ndarray): (M, m) reference points.
    RETURNS (numpy.ndarray): N distances.
    """
    if X.shape[0] * Y.shape[0] <= DENSE_DISTANCE_LIMIT:
        return cdist(X, Y).min(axis=1)
    distances, _ = cKDTree(Y).query(X, k=1, workers=get_thread_count())
    return numpy.asarray(distances)


def directed_distance(B: PointSet, C: PointSet) -> float:
    """Directed distance sup_{x in B} inf_{y in C} |x - y|.
    B (PointSet): Source set.
    C (PointSet): Target set.
    RETURNS (float): Largest distance from a point of B to C.
    """
    _check_dims(B, C)
    return float(nearest_distances(B.points, C.points).max())


def hausdorff(B: PointSet, C: PointSet) -> float:
    """Hausdorff distance between two finite point sets.
    B (PointSet): First set.
    C (PointSet): Second set.
    RETURNS (float): max of both directed distances.
    """
    return max(directed_distance(B, C), directed_distance(C, B))


def sets_equal(B: PointSet, C: PointSet, tol: float = SET_TOLERANCE) -> bool:
    """Whether two point sets agree up to tol in the Hausdorff metric.
    B (PointSet): First set.
    C (PointSet): Second set.
    tol (float): Tolerance.
    RETURNS (bool): True if h(B, C) <= tol.
    """
    return hausdorff(B, C) <= tol


def union(sets: Iterable[PointSet]) -> PointSet:
    """Union of point sets with exact duplicates removed.
    sets (Iterable[PointSet]): Sets of common dimension.
    RETURNS (PointSet): Union.
    """
    sets = list(sets)
    if not sets:
        raise ValueError("Union of no sets is empty.")
    dims = {s.dim for s in sets}
    if len(dims) != 1:
        raise DimensionMismatchError(f"Point sets of differing dimensions {sorted(dims)}.")
    return PointSet(points=numpy.unique(numpy.vstack([s.points for s in sets]), axis=0))


def decimate(S: PointSet, eps: float) -> PointSet:
    """Thin a point set to at most one point per grid cell of side eps. Kept points are points of S, chosen as the
    first occurrence per cell, so that h(S, decimate(S, eps)) <= eps * sqrt(m).
    S (PointSet): Set to thin.
    eps (float): Cell size, positive.
    RETURNS (PointSet): Subset of S.
    """
    if eps <= 0:
        raise ValueError(f"Decimation cell size must be positive, got {eps}.")
    # float cell indices; an integer cast overflows for large coordinates over small cells
    cells = numpy.floor(S.points / eps)
    _, first = numpy.unique(cells, axis=0, return_index=True)
    return PointSet(points=S.points[numpy.sort(first)])


def diameter(S: PointSet, chunk_size: int = 2048) -> float:
    """Largest distance between two points of S.
    S (PointSet): Point set.
    chunk_size (int): Rows compared at once for large sets.
    RETURNS (float): Diameter, zero for a single point.
    """
    points = S.points
    if len(points) < 2:
        return 0.0
    if len(points) <= chunk_size:
        return float(pdist(points).max())
    return float(
        max(
            cdist(points[start : start + chunk_size], points).max()
            for start in range(0, len(points), chunk_size)
        )
    )
