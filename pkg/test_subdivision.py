""" Testing binary subdivision: refinement, slices and convergence estimates. """
import numpy
import pytest

from scripts.sfs.catalog import (
    cubic_bspline_mask,
    default_polygon,
    exponential_spline_masks,
    fourpoint_mask,
    random_fourpoint_masks,
)
from scripts.sfs.constants import FOUR_POINT_POLYGON
from scripts.sfs.schemas import InsufficientDataError, Mask
from scripts.sfs.subdivision import (
    c0_convergence_estimate,
    check_constant_reproduction,
    constant_mask_sequence,
    non_reproducing_perturbation,
    refine,
    refinement_matrix,
    slice_eigenvalues,
    slice_matrices,
    slice_product_union,
    subdivide_levels,
    subdominant_radius,
    word_products,
)


def test_refine_delta_data_gives_mask():
    p = numpy.zeros(9)
    p[4] = 1.0
    out = refine(cubic_bspline_mask(), p)
    assert out.shape == (15, 1)
    assert numpy.allclose(out[5:10, 0], [1 / 8, 1 / 2, 3 / 4, 1 / 2, 1 / 8])


def test_refine_constants_and_identity():
    assert numpy.allclose(refine(cubic_bspline_mask(), numpy.ones(6)), 1.0)
    p = numpy.random.default_rng(0).random((7, 2))
    assert numpy.array_equal(refine(Mask(coeffs=[1.0]), p), p)


def test_refine_is_linear():
    rng = numpy.random.default_rng(1)
    for mask in (cubic_bspline_mask(), fourpoint_mask(0.3), exponential_spline_masks(3.0).mask(2)):
        p, q = rng.normal(size=(10, 2)), rng.normal(size=(10, 2))
        a, b = rng.normal(size=2)
        assert numpy.allclose(refine(mask, a * p + b * q), a * refine(mask, p) + b * refine(mask, q))


def test_refine_needs_enough_points():
    with pytest.raises(InsufficientDataError):
        refine(cubic_bspline_mask(), [[0.0, 0.0]])
    with pytest.raises(ValueError):
        refine(cubic_bspline_mask(), numpy.zeros((0, 2)))


def test_constant_reproduction():
    assert check_constant_reproduction(cubic_bspline_mask()).reproduces
    halves = check_constant_reproduction(Mask(coeffs=[0.5, 0.5]))
    assert not halves.reproduces
    assert halves.even_sum == pytest.approx(0.5) and halves.odd_sum == pytest.approx(0.5)
    for w in (-0.2, 0.0, 1 / 16, 0.3):
        assert check_constant_reproduction(fourpoint_mask(w)).reproduces


def test_slices_reproduce_constants():
    masks = [cubic_bspline_mask(), fourpoint_mask(0.4)] + [exponential_spline_masks(3.0).mask(k) for k in (1, 5)]
    for mask in masks:
        slices = slice_matrices(mask, 6)
        for r in (1, 2):
            assert numpy.allclose(slices[r] @ numpy.ones(6), 1.0, atol=1e-12)


def test_exponential_slice_pattern():
    mask = exponential_spline_masks(3.0).mask(1)
    c = numpy.exp(0.75)
    b = 1 / (1 + c) ** 3
    S1 = slice_matrices(mask, 5)[1]
    assert numpy.allclose(S1[0, :2], [b * (3 * c**2 + c**3), b * (1 + 3 * c)])
    assert numpy.allclose(S1[1, :3], [b * c**3, 3 * b * (c + c**2), b])


def test_slice_size_checks():
    with pytest.raises(InsufficientDataError):
        slice_matrices(cubic_bspline_mask(), 3)
    with pytest.raises(IndexError):
        slice_matrices(cubic_bspline_mask(), 5)[3]


def test_slice_rows_are_refinement_rows():
    mask = fourpoint_mask(0.1)
    R = refinement_matrix(mask, 6)
    slices = slice_matrices(mask, 6)
    assert numpy.array_equal(slices.S1, R[:6])
    assert numpy.array_equal(slices.S2, R[-6:])
    assert slices.parity == "odd"


def test_cubic_slice_eigenvalues():
    slices = slice_matrices(cubic_bspline_mask(), 5)
    assert numpy.allclose(slice_eigenvalues(slices.S1), [1, 1 / 2, 1 / 4, 1 / 8, 0], atol=1e-9)
    assert subdominant_radius(slices) == pytest.approx(0.5)


def test_subdivide_levels():
    p0 = default_polygon(5)
    assert numpy.array_equal(subdivide_levels(cubic_bspline_mask(), p0, 0), p0)
    line = numpy.array([[t, 2 * t + 1] for t in range(6)], dtype=float)
    refined = subdivide_levels(cubic_bspline_mask(), line, 4)
    assert numpy.allclose(refined[:, 1], 2 * refined[:, 0] + 1, atol=1e-12)
    with pytest.raises(ValueError):
        subdivide_levels(cubic_bspline_mask(), p0, -1)


def test_mask_sequences():
    cubic = cubic_bspline_mask()
    stationary = constant_mask_sequence(cubic)
    assert stationary.mask(7) is cubic and stationary.limit is cubic
    perturbed = non_reproducing_perturbation(cubic, Mask(coeffs=[0.1, 0.5, 0.7, 0.5, 0.1]))
    assert not check_constant_reproduction(perturbed.mask(1)).reproduces
    assert perturbed.mask(2) is cubic
    with pytest.raises(ValueError):
        non_reproducing_perturbation(cubic, Mask(coeffs=[0.5, 0.5]))


def test_word_products_order():
    masks = exponential_spline_masks(3.0)
    s1, s2 = slice_matrices(masks.mask(1), 5), slice_matrices(masks.mask(2), 5)
    backward, sampled = word_products(masks, 5, [1, 2])
    forward, _ = word_products(masks, 5, [1, 2], forward=True)
    assert backward.shape == (4, 5, 5) and not sampled

    def contains(stack, M):
        return any(numpy.allclose(P, M) for P in stack)

    for a in (1, 2):
        for b in (1, 2):
            assert contains(backward, s2[a] @ s1[b])
            assert contains(forward, s1[b] @ s2[a])
    assert not contains(backward, s1[1] @ s2[2])


def test_word_products_sampling():
    products, sampled = word_products(cubic_bspline_mask(), 5, [1, 2, 3], max_words=4)
    assert sampled
    assert products.shape == (4, 5, 5)


def test_slice_product_union_one_level():
    p0 = default_polygon(5)
    slices = slice_matrices(cubic_bspline_mask(), 5)
    union = slice_product_union(cubic_bspline_mask(), p0, 1)
    expected = numpy.unique(numpy.vstack([slices.S1 @ p0, slices.S2 @ p0]), axis=0)
    assert numpy.allclose(union.points, expected)


def test_c0_estimate_cubic():
    estimate = c0_convergence_estimate(cubic_bspline_mask(), default_polygon(5), 10)
    assert estimate.classification == "c0-like"
    assert all(0.4 <= r <= 0.6 for r in estimate.difference_ratios[4:])
    assert len(estimate.max_differences) == 11
    assert len(estimate.hausdorff_steps) == 10


def test_c0_estimate_duplication_is_inconclusive():
    estimate = c0_convergence_estimate(Mask(coeffs=[1.0, 1.0]), default_polygon(5), 4)
    assert estimate.classification == "inconclusive"
    assert numpy.allclose(estimate.max_differences, estimate.max_differences[0])


def test_c0_estimate_random_fourpoint():
    estimate = c0_convergence_estimate(random_fourpoint_masks(0.4, seed=7), FOUR_POINT_POLYGON, 12)
    assert estimate.hausdorff_steps[-1] < estimate.hausdorff_steps[0]
    with pytest.raises(ValueError):
        c0_convergence_estimate(cubic_bspline_mask(), FOUR_POINT_POLYGON, 1)
