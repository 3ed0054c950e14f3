""" Testing function systems: Hutchinson operator, attractors, trajectories and contraction bookkeeping. """
import numpy
import pytest

from scripts.sfs.catalog import alternating_halves_schedule, cantor_ifs, dyadic_ifs, koch_ifs
from scripts.sfs.function_systems import (
    backward_trajectory,
    composition_factor,
    constant_schedule,
    contraction_factor,
    forward_trajectory,
    hutchinson_apply,
    ifs_attractor,
    invariant_ball,
    invariant_ball_for,
    lipschitz,
    periodic_schedule,
    product_diagnostic,
    similarity_bound,
    spectral_norms,
    theorem_error_bound,
)
from scripts.sfs.metric_sets import hausdorff, sets_equal
from scripts.sfs.schemas import (
    AffineMap,
    DimensionMismatchError,
    FunctionSystem,
    NonContractiveError,
    PointSet,
    SfsSchedule,
)


def _ps(points) -> PointSet:
    return PointSet(points=points)


def _single(A, b) -> FunctionSystem:
    return FunctionSystem(maps=[AffineMap(A=A, b=b)])


def _random_system(rng, dim: int, count: int, mu: float) -> FunctionSystem:
    maps = []
    for _ in range(count):
        A = rng.normal(size=(dim, dim))
        A *= rng.uniform(0, mu) / numpy.linalg.norm(A, 2)
        maps.append(AffineMap(A=A, b=rng.normal(size=dim)))
    return FunctionSystem(maps=maps)


@pytest.mark.parametrize(
    "A,expected",
    [
        ([[0.5, 0.0], [0.0, 0.25]], 0.5),
        ([[0.0, 0.0], [0.0, 0.0]], 0.0),
        ([[0.0, 1.0], [0.0, 0.0]], 1.0),
    ],
)
def test_lipschitz(A, expected):
    assert lipschitz(AffineMap(A=A, b=[1.0, -1.0])) == pytest.approx(expected, abs=1e-9)


def test_spectral_norms_match_svd():
    stack = numpy.random.default_rng(0).normal(size=(50, 4, 4))
    expected = numpy.linalg.norm(stack, 2, axis=(1, 2))
    assert numpy.allclose(spectral_norms(stack), expected, rtol=1e-4)


def test_contraction_factors():
    assert contraction_factor(dyadic_ifs()) == pytest.approx(0.5)
    assert contraction_factor(cantor_ifs()) == pytest.approx(1 / 3)
    assert contraction_factor(koch_ifs()) == pytest.approx(1 / 3)


def test_composition_factor():
    F = _single([[0.0, 2.0], [0.1, 0.0]], [0.0, 0.0])
    assert contraction_factor(F) == pytest.approx(2.0)
    assert composition_factor(F, 2) == pytest.approx(0.2)
    assert composition_factor(dyadic_ifs(), 20) == pytest.approx(0.5**20)
    with pytest.raises(ValueError):
        composition_factor(F, 0)


def test_hutchinson_apply():
    result = hutchinson_apply(dyadic_ifs(), _ps([0, 1]))
    assert result.points.ravel().tolist() == [0.0, 0.5, 1.0]
    result = hutchinson_apply(cantor_ifs(), _ps([0, 1]))
    assert numpy.allclose(result.points.ravel(), [0, 1 / 3, 2 / 3, 1])

    B = _ps(numpy.random.default_rng(1).random((10, 2)))
    assert sets_equal(hutchinson_apply(_single(numpy.eye(2), [0, 0]), B), B, tol=0.0)

    with pytest.raises(DimensionMismatchError):
        hutchinson_apply(dyadic_ifs(), _ps([[0, 0]]))
    with pytest.raises(ValueError):
        hutchinson_apply(dyadic_ifs(), _ps([0]), eps=-1.0)


def test_hutchinson_contraction_bound():
    rng = numpy.random.default_rng(2)
    for _ in range(500):
        dim = int(rng.integers(1, 4))
        F = _random_system(rng, dim, int(rng.integers(1, 4)), 1.5)
        L = max(numpy.linalg.norm(f.A, 2) for f in F.maps)
        A = _ps(rng.normal(size=(int(rng.integers(1, 6)), dim)))
        B = _ps(rng.normal(size=(int(rng.integers(1, 6)), dim)))
        lhs = hausdorff(hutchinson_apply(F, A), hutchinson_apply(F, B))
        assert lhs <= L * hausdorff(A, B) * (1 + 1e-9) + 1e-12


def test_ifs_attractor_dyadic_fills_interval():
    result = ifs_attractor(dyadic_ifs(), _ps([0]), tol=1e-3)
    assert result.converged
    assert result.h_steps[-1] < 1e-3
    grid = _ps(numpy.linspace(0, 1, 10001))
    assert hausdorff(result.points, grid) <= 2e-3


def test_ifs_attractor_cantor():
    result = ifs_attractor(cantor_ifs(), _ps([0, 1]), tol=1e-6)
    assert result.converged
    assert result.h_steps[-1] < 1e-6
    assert result.contraction_factor == pytest.approx(1 / 3)
    ratios = numpy.array(result.h_steps[1:]) / numpy.array(result.h_steps[:-1])
    assert numpy.allclose(ratios, 1 / 3)
    assert result.error_bound == pytest.approx(0.5)
    assert result.points.points.min() == 0.0 and result.points.points.max() == 1.0


def test_ifs_attractor_fixed_point():
    result = ifs_attractor(_single([[0.5]], [1.0]), _ps([0]), tol=1e-8)
    assert len(result.points) == 1
    assert result.points.points[0, 0] == pytest.approx(2.0, abs=1e-6)


def test_ifs_attractor_errors():
    with pytest.raises(NonContractiveError):
        ifs_attractor(_single([[2.0]], [0.0]), _ps([0]))
    with pytest.raises(ValueError):
        ifs_attractor(dyadic_ifs(), _ps([0]), max_iter=0)


def test_ifs_attractor_flags_non_convergence():
    result = ifs_attractor(cantor_ifs(), _ps([0, 1]), tol=1e-12, max_iter=3)
    assert not result.converged
    assert result.iterations == 3


def test_theorem_error_bound():
    assert theorem_error_bound(0.5, 1.0) == pytest.approx(2.0)
    with pytest.raises(NonContractiveError):
        theorem_error_bound(1.0, 1.0)


def test_constant_schedule_matches_iterates():
    F, B0 = cantor_ifs(), _ps([0, 1])
    forward = forward_trajectory(constant_schedule(F), B0, [0, 1, 2, 3], eps=0.0)
    B = B0
    for depth, S in zip(forward.depths, forward.sets):
        assert sets_equal(S, B, tol=0.0), depth
        B = hutchinson_apply(F, B)
    backward = backward_trajectory(constant_schedule(F), B0, [1, 3], eps=0.0)
    assert sets_equal(backward.sets[0], hutchinson_apply(F, B0))
    assert sets_equal(backward.sets[1], forward.sets[3])


def test_alternating_halves():
    schedule, A = alternating_halves_schedule(3.0), _ps([0])
    backward = backward_trajectory(schedule, A, [40], eps=0.0)
    assert abs(backward.sets[0].points[0, 0] - 2.0) < 1e-9
    forward = forward_trajectory(schedule, A, [39, 40], eps=0.0)
    assert abs(forward.sets[0].points[0, 0] - 2.0) < 1e-6
    assert abs(forward.sets[1].points[0, 0] - 4.0) < 1e-6
    assert forward.h_steps[0] == pytest.approx(2.0, abs=1e-5)


def test_trajectory_depth_checks():
    schedule = constant_schedule(dyadic_ifs())
    with pytest.raises(ValueError):
        forward_trajectory(schedule, _ps([0]), [3, 2])
    with pytest.raises(ValueError):
        backward_trajectory(schedule, _ps([0]), [])
    with pytest.raises(DimensionMismatchError):
        forward_trajectory(schedule, _ps([[0, 0]]), [1])


def test_schedule_dimension_is_checked():
    schedule = SfsSchedule(generator=lambda k: dyadic_ifs() if k < 3 else koch_ifs(), dim=1)
    schedule.system(2)
    with pytest.raises(DimensionMismatchError):
        schedule.system(3)
    with pytest.raises(ValueError):
        schedule.system(0)


def test_periodic_schedule():
    schedule = periodic_schedule([dyadic_ifs(), cantor_ifs()], [2, 1])
    assert [schedule.system(k).label for k in range(1, 7)] == ["dyadic", "dyadic", "cantor"] * 2
    with pytest.raises(ValueError):
        periodic_schedule([dyadic_ifs()], [0])
    with pytest.raises(DimensionMismatchError):
        periodic_schedule([dyadic_ifs(), koch_ifs()], [1, 1])


def test_invariant_ball():
    assert invariant_ball([0.0], 0.5, 1.0).radius == pytest.approx(2.0)
    assert invariant_ball([0.0, 0.0], 0.0, 5.0).radius == pytest.approx(5.0)
    with pytest.raises(NonContractiveError):
        invariant_ball([0.0], 1.0, 1.0)
    ball = invariant_ball_for(dyadic_ifs())
    assert ball.radius == pytest.approx(1.0)


def test_invariant_ball_is_mapped_into_itself():
    rng = numpy.random.default_rng(3)
    for _ in range(200):
        dim = int(rng.integers(1, 4))
        F = _random_system(rng, dim, int(rng.integers(1, 4)), 0.9)
        q = rng.normal(size=dim)
        mu = max(numpy.linalg.norm(f.A, 2) for f in F.maps)
        M = max(numpy.linalg.norm(f.apply(q[None])[0] - q) for f in F.maps)
        ball = invariant_ball(q, mu, M)
        directions = rng.normal(size=(50, dim))
        directions /= numpy.linalg.norm(directions, axis=1, keepdims=True)
        boundary = q + ball.radius * directions * rng.uniform(0, 1, size=(50, 1))
        for f in F.maps:
            assert ball.contains(_ps(f.apply(boundary)), tol=1e-9)


def test_similarity_bound():
    assert similarity_bound([0.5, 0.5, 0.5], 8.0) == pytest.approx(1.0)
    assert similarity_bound([], 3.0) == pytest.approx(3.0)
    assert similarity_bound([0.5, 0.0, 2.0], 3.0) == 0.0


def test_asymptotic_similarity():
    rng = numpy.random.default_rng(4)
    maps = [_random_system(rng, 2, 1, 1.2) for _ in range(30)]
    schedule = SfsSchedule(generator=lambda k: maps[k - 1], dim=2)
    s = [numpy.linalg.norm(F.maps[0].A, 2) for F in maps]
    x, y = rng.normal(size=2), rng.normal(size=2)
    for K in (5, 15, 30):
        psi_x = backward_trajectory(schedule, _ps([x]), [K], eps=0.0).sets[0].points[0]
        psi_y = backward_trajectory(schedule, _ps([y]), [K], eps=0.0).sets[0].points[0]
        bound = similarity_bound(s[:K], float(numpy.linalg.norm(x - y)))
        assert numpy.linalg.norm(psi_x - psi_y) <= bound * (1 + 1e-9) + 1e-12


def test_product_diagnostic_geometric():
    diagnostic = product_diagnostic([0.9] * 100)
    assert diagnostic.partial_sums[-1] == pytest.approx(9.0, abs=1e-3)
    assert diagnostic.tail_ratio == pytest.approx(0.9)
    assert diagnostic.classification == "sum-converges"


def test_product_diagnostic_harmonic():
    diagnostic = product_diagnostic([1 - 1 / (i + 1) for i in range(1, 101)])
    assert diagnostic.partial_products[-1] == pytest.approx(1 / 101)
    assert diagnostic.classification == "product-to-zero"


def test_product_diagnostic_constant_one():
    assert product_diagnostic([1.0] * 50).classification == "inconclusive"
    with pytest.raises(ValueError):
        product_diagnostic([])
    with pytest.raises(ValueError):
        product_diagnostic([0.5, -0.1])
