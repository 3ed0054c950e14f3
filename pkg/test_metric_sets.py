""" Testing Hausdorff metric, decimation and diameter of finite point sets. """
import math

import numpy
import pytest

from scripts.sfs import metric_sets
from scripts.sfs.metric_sets import (
    decimate,
    diameter,
    directed_distance,
    hausdorff,
    nearest_distances,
    sets_equal,
    union,
)
from scripts.sfs.schemas import DimensionMismatchError, PointSet
from scripts.utils import THREADS_ENV_VAR, get_thread_count


def _ps(points) -> PointSet:
    return PointSet(points=points)


@pytest.mark.parametrize(
    "B,C,expected",
    [
        ([[0, 0]], [[3, 4]], 5.0),
        ([0, 1], [0], 1.0),
        ([0], [0, 1], 0.0),
    ],
)
def test_directed_distance(B, C, expected):
    assert directed_distance(_ps(B), _ps(C)) == pytest.approx(expected)


def test_hausdorff_examples():
    assert hausdorff(_ps([0, 1]), _ps([0])) == pytest.approx(1.0)
    assert hausdorff(_ps([[0, 0], [1, 0]]), _ps([[0, 0], [0, 1]])) == pytest.approx(1.0)
    S = _ps(numpy.random.default_rng(3).random((20, 3)))
    assert hausdorff(S, S) == 0.0


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        hausdorff(_ps([[0, 0]]), _ps([[0, 0, 0]]))
    with pytest.raises(DimensionMismatchError):
        union([_ps([[0, 0]]), _ps([0])])


def test_hausdorff_axioms():
    rng = numpy.random.default_rng(0)
    for _ in range(1000):
        dim = int(rng.integers(1, 4))
        A, B, C = (_ps(rng.normal(size=(int(rng.integers(1, 9)), dim))) for _ in range(3))
        h_ab, h_ba = hausdorff(A, B), hausdorff(B, A)
        assert h_ab >= 0
        assert h_ab == pytest.approx(h_ba, abs=1e-15)
        assert hausdorff(A, A) == 0.0
        assert hausdorff(A, C) <= h_ab + hausdorff(B, C) + 1e-12


def test_kd_tree_branch_matches_dense(monkeypatch):
    rng = numpy.random.default_rng(1)
    X, Y = rng.random((300, 2)), rng.random((200, 2))
    dense = nearest_distances(X, Y)
    monkeypatch.setattr(metric_sets, "DENSE_DISTANCE_LIMIT", 0)
    assert numpy.allclose(nearest_distances(X, Y), dense, rtol=0, atol=1e-15)


def test_sets_equal_ignores_order():
    points = numpy.array([[0.0, 1.0], [2.0, 3.0], [4.0, 5.0]])
    assert sets_equal(_ps(points), _ps(points[::-1]))
    assert not sets_equal(_ps(points), _ps(points + 1e-6))


def test_union_drops_duplicates():
    result = union([_ps([0, 0.5]), _ps([0.5, 1])])
    assert result.points.ravel().tolist() == [0.0, 0.5, 1.0]


def test_decimate():
    assert len(decimate(_ps([0.0, 0.0004, 1.0]), 1e-3)) == 2
    S = _ps([0.0, 1.0])
    assert sets_equal(decimate(S, 1e-6), S, tol=0.0)

    S = _ps(numpy.random.default_rng(2).random((1000, 2)))
    thinned = decimate(S, 0.1)
    assert len(thinned) <= 121
    assert hausdorff(S, thinned) <= 0.1 * math.sqrt(2)
    # kept points are points of S
    assert directed_distance(thinned, S) == 0.0

    with pytest.raises(ValueError):
        decimate(S, 0.0)


def test_diameter():
    assert diameter(_ps([0])) == 0.0
    assert diameter(_ps([[0, 0], [3, 4]])) == pytest.approx(5.0)
    assert diameter(_ps([[0, 0], [1, 0], [0, 1], [1, 1]])) == pytest.approx(math.sqrt(2))
    points = numpy.random.default_rng(4).random((3000, 2))
    assert diameter(_ps(points), chunk_size=512) == pytest.approx(diameter(_ps(points), chunk_size=5000))


def test_thread_count(monkeypatch):
    monkeypatch.setenv(THREADS_ENV_VAR, "2")
    assert get_thread_count() == 2
    monkeypatch.setenv(THREADS_ENV_VAR, "many")
    assert get_thread_count() >= 1


def test_decimate_large_coordinates():
    S = _ps([1e15, 2e15])
    thinned = decimate(S, 1e-4)
    assert len(thinned) == 2
    assert hausdorff(S, thinned) == 0.0

    S = _ps(1e12 + numpy.random.default_rng(5).random((200, 2)))
    assert hausdorff(S, decimate(S, 0.1)) <= 0.1 * math.sqrt(2)


def test_directed_distance_vanishes_on_subsets():
    rng = numpy.random.default_rng(6)
    for _ in range(200):
        B = rng.normal(size=(int(rng.integers(2, 12)), int(rng.integers(1, 4))))
        A = B[rng.choice(len(B), size=int(rng.integers(1, len(B) + 1)), replace=False)]
        assert directed_distance(_ps(A), _ps(B)) == 0.0
        outside = numpy.vstack([A, B.max(axis=0) + 1.0])
        assert directed_distance(_ps(outside), _ps(B)) > 0.0
