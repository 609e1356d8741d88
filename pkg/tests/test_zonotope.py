import math

import numpy as np
import pytest

from robnav.zonotope import (
    Interval,
    Zonotope,
    hull_arrays,
    hull_contains,
    interval_abs_square,
    interval_div,
    interval_hull,
    interval_scale,
    interval_sign,
    interval_tan,
    linear_image,
    minkowski_sum,
    reduce,
    reduce_generators,
)


def test_minkowski_sum_concatenates():
    z = minkowski_sum(Zonotope([1, 0], np.eye(2)), Zonotope([-1, 0], np.eye(2)))
    np.testing.assert_array_equal(z.center, [0, 0])
    np.testing.assert_array_equal(z.generators, np.hstack((np.eye(2), np.eye(2))))


def test_minkowski_sum_empty_is_identity():
    z = Zonotope([1.0, 2.0], [[1.0, 0.5], [0.0, 2.0]])
    out = z + Zonotope([0.0, 0.0])
    np.testing.assert_array_equal(out.center, z.center)
    np.testing.assert_array_equal(out.generators, z.generators)


def test_minkowski_sum_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension mismatch"):
        minkowski_sum(Zonotope([0, 0]), Zonotope([0, 0, 0]))


def test_linear_image_scaling():
    z = linear_image(2 * np.eye(2), Zonotope([1, 1], np.eye(2)))
    np.testing.assert_array_equal(z.center, [2, 2])
    np.testing.assert_array_equal(z.generators, 2 * np.eye(2))


def test_linear_image_identity_and_rmatmul():
    z = Zonotope([0.3, -1.0], [[1.0, 2.0, 0.0], [0.5, 0.0, 1.0]])
    out = np.eye(2) @ z
    np.testing.assert_array_equal(out.generators, z.generators)


def test_linear_image_rejects_bad_shape():
    with pytest.raises(ValueError):
        linear_image(np.eye(3), Zonotope([0, 0], np.eye(2)))


def test_interval_hull_row_sums():
    hull = interval_hull(Zonotope([0, 0], [[1, 0, 1], [0, 1, 1]]))
    assert [(iv.lo, iv.hi) for iv in hull] == [(-2, 2), (-2, 2)]


def test_point_zonotope_hull_is_degenerate():
    hull = Zonotope([1.5, -2.0], np.zeros((2, 3))).hull()
    assert [(iv.lo, iv.hi) for iv in hull] == [(1.5, 1.5), (-2.0, -2.0)]


def test_reduce_noop_when_order_small():
    g = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert reduce_generators(g, 3) is g


def test_reduce_full_boxing():
    z = reduce(Zonotope([0, 0], [[4, 1, 0.5], [0, 1, 0.5]]), 2)
    np.testing.assert_allclose(z.generators, np.diag([5.5, 1.5]))


def test_reduce_rejects_order_below_dimension():
    with pytest.raises(ValueError, match="below dimension"):
        reduce_generators(np.ones((3, 5)), 2)


def test_reduce_keeps_largest_columns():
    g = np.array([[10.0, 0.1, 0.2, 0.0], [0.0, 0.1, 0.0, 0.3]])
    out = reduce_generators(g, 3)
    assert out.shape == (2, 3)
    np.testing.assert_array_equal(out[:, 0], [10.0, 0.0])
    np.testing.assert_allclose(out[:, 1:], np.diag([0.3, 0.4]))


def test_reduce_tie_break_is_by_index():
    g = np.array([[1.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.0, 1.0]])
    out = reduce_generators(g, 3)
    np.testing.assert_array_equal(out[:, 0], [1.0, 0.0])


@pytest.mark.parametrize("seed", range(20))
def test_reduce_preserves_hull_and_contains(seed):
    rng = np.random.default_rng(seed)
    n = rng.integers(1, 5)
    m = rng.integers(n + 1, 13)
    z = Zonotope(rng.normal(size=n), rng.normal(size=(n, m)))
    q = int(rng.integers(n, m))
    r = reduce(z, q)
    assert r.order == q
    np.testing.assert_allclose(r.radius(), z.radius(), rtol=1e-12)
    for d in rng.normal(size=(50, n)):
        assert z.support(d) <= r.support(d) + 1e-12


def test_sample_points_inside_hull():
    rng = np.random.default_rng(3)
    z = Zonotope([1.0, -1.0, 0.5], rng.normal(size=(3, 6)))
    lo, hi = hull_arrays(z)
    pts = z.sample(rng, 500)
    assert np.all(pts >= lo) and np.all(pts <= hi)


def test_hull_contains_boundary():
    hull = [Interval(-2, 2), Interval(-2, 2)]
    assert hull_contains(hull, (0, 0))
    assert hull_contains(hull, (2.0, -2.0))
    assert not hull_contains(hull, (2.0001, 0))


def test_hull_contains_dimension_check():
    with pytest.raises(ValueError):
        hull_contains([Interval(0, 1)], (0, 0))


def test_interval_product():
    out = Interval(1, 2) * Interval(-1, 3)
    assert (out.lo, out.hi) == (-2, 6)


def test_interval_tan_monotone():
    out = interval_tan(Interval(0.0, math.pi / 4))
    assert out.lo == 0.0
    assert out.hi == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("bad", [Interval(0.0, math.pi / 2), Interval(-2.0, 0.0)])
def test_interval_tan_domain(bad):
    with pytest.raises(ValueError, match="tan domain"):
        interval_tan(bad)


def test_interval_additive_identity():
    a = Interval(-0.5, 1.25)
    assert a + Interval(0, 0) == a
    assert a + 0.0 == a


def test_interval_division():
    out = interval_div(Interval(2, 4), Interval(1, 2))
    assert (out.lo, out.hi) == (1, 4)
    with pytest.raises(ZeroDivisionError):
        interval_div(Interval(1, 2), Interval(-1, 1))


def test_interval_subtraction_and_negation():
    a, b = Interval(1, 3), Interval(0, 1)
    assert a - b == Interval(0, 3)
    assert -a == Interval(-3, -1)
    assert 5.0 - a == Interval(2, 4)


def test_interval_scale_negative():
    assert interval_scale(Interval(1, 2), -2.0) == Interval(-4, -2)


def test_interval_abs_square_and_sign():
    assert interval_abs_square(Interval(-2, 3)) == Interval(-4, 9)
    assert interval_sign(Interval(-1, 2)) == Interval(-1, 1)
    assert interval_sign(Interval(0, 2)) == Interval(0, 1)
    assert interval_sign(Interval(0.5, 2)) == Interval(1, 1)


def test_interval_rejects_reversed_bounds():
    with pytest.raises(ValueError):
        Interval(1.0, 0.0)


def test_interval_ops_are_inclusion_isotone():
    rng = np.random.default_rng(11)
    for _ in range(200):
        a_lo, b_lo = rng.uniform(-3, 3, size=2)
        a = Interval(a_lo, a_lo + rng.uniform(0, 2))
        b = Interval(b_lo, b_lo + rng.uniform(0, 2))
        x = rng.uniform(a.lo, a.hi)
        y = rng.uniform(b.lo, b.hi)
        assert (a + b).contains(x + y)
        assert (a - b).contains(x - y)
        assert (a * b).contains(x * y)
        wide = Interval(a.lo - 0.5, a.hi + 0.5)
        assert (a * b).issubset(wide * b)
