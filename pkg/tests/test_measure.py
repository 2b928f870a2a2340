from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coversol import samples
from coversol.measure import (LevelFunction, LevelMismatchError, averaging_matrix, density_rank,
                              fiber_size, inner_product, integral, level_measure,
                              measure_consistency, norm, pullback, pullback_adjoint,
                              pullback_matrix)


def test_total_mass_is_one(loop3):
    for i in range(0, 4):
        assert level_measure(loop3, i, exact=True).total() == 1
        assert level_measure(loop3, i).total() == pytest.approx(1.0, abs=1e-15)


def test_consistency_exact_zero(loop3):
    assert measure_consistency(loop3, 1, 3, exact=True) == 0
    assert measure_consistency(loop3, 1, 3) == 0.0


def test_consistency_sl2(sl2_tower2):
    assert measure_consistency(sl2_tower2, 1, 2) <= 1e-12


def test_consistency_random_rational_measures():
    for seed in range(6):
        _, tw = samples.random_tower(seed)
        for i in range(0, tw.depth):
            gap = measure_consistency(tw, i, tw.depth, exact=True)
            assert isinstance(gap, Fraction) and gap == 0


def test_square_pullback_example(square):
    f = LevelFunction(1, np.array([1.0, -1.0]))
    g = pullback(f, square, 2)
    assert g.level == 2
    assert np.array_equal(g.values, [1, -1, 1, -1])
    assert norm(f, level_measure(square, 1)) == pytest.approx(1.0, abs=1e-15)
    assert norm(g, level_measure(square, 2)) == pytest.approx(1.0, abs=1e-15)


def test_function_alternating_on_fibers_averages_to_zero(square):
    # the fiber over vertex y of C_2 is {y, y + 2}
    g = LevelFunction(2, np.array([1.0, 1.0, -1.0, -1.0]))
    assert np.array_equal(pullback_adjoint(g, square, 1).values, [0.0, 0.0])


def test_adjoint_exact_rational(square):
    g = LevelFunction(2, np.array([Fraction(1, 3), Fraction(2), Fraction(-1), Fraction(1, 2)],
                                  dtype=object))
    q = pullback_adjoint(g, square, 1)
    assert list(q.values) == [(Fraction(1, 3) - 1) / 2, (Fraction(2) + Fraction(1, 2)) / 2]


def test_level_mismatch_raises(loop3):
    f = LevelFunction(1, np.ones(2))
    with pytest.raises(LevelMismatchError):
        inner_product(f, f, level_measure(loop3, 2))
    with pytest.raises(LevelMismatchError):
        inner_product(LevelFunction(2, np.ones(2)), LevelFunction(2, np.ones(2)),
                      level_measure(loop3, 2))


def test_exact_inner_product(loop3):
    mu = level_measure(loop3, 2, exact=True)
    f = LevelFunction(2, np.array([Fraction(k) for k in range(6)], dtype=object))
    assert inner_product(f, f, mu) == Fraction(sum(k * k for k in range(6)), 6)
    assert integral(f, mu) == Fraction(15, 6)


def test_lp_norms(loop3):
    mu = level_measure(loop3, 1)
    f = LevelFunction(1, np.array([3.0, -4.0]))
    assert norm(f, mu, 1) == pytest.approx(3.5)
    assert norm(f, mu, 2) == pytest.approx(np.sqrt(12.5))
    with pytest.raises(ValueError):
        norm(f, mu, 0.5)


def test_averaging_is_adjoint_of_pullback(sl2_tower2, rng):
    p = pullback_matrix(sl2_tower2, 2, 1)
    a = averaging_matrix(sl2_tower2, 2, 1)
    mu1, mu2 = level_measure(sl2_tower2, 1).weights, level_measure(sl2_tower2, 2).weights
    f, g = rng.standard_normal(6), rng.standard_normal(144)
    lhs = np.sum((p @ f) * g * mu2)
    rhs = np.sum(f * (a @ g) * mu1)
    assert abs(lhs - rhs) <= 1e-13 * (1 + abs(lhs))
    assert fiber_size(sl2_tower2, 2, 1) == 24


def test_density_rank_full(loop3):
    info = density_rank(loop3, 3)
    assert info["full"] and info["stacked_rank"] == 12
    assert info["block_ranks"] == [1, 2, 6, 12]


towers = [samples.random_tower(s)[1] for s in range(4)]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 3), st.integers(0, 2**32 - 1))
def test_pullback_preserves_inner_products(t, seed):
    tw = towers[t]
    rng = np.random.default_rng(seed)
    i = int(rng.integers(1, tw.depth))
    j = int(rng.integers(i + 1, tw.depth + 1))
    n = tw.level(i).vertex_count
    f = LevelFunction(i, rng.standard_normal(n) + 1j * rng.standard_normal(n))
    g = LevelFunction(i, rng.standard_normal(n) + 1j * rng.standard_normal(n))
    lo = inner_product(f, g, level_measure(tw, i))
    hi = inner_product(pullback(f, tw, j), pullback(g, tw, j), level_measure(tw, j))
    scale = norm(f, level_measure(tw, i)) * norm(g, level_measure(tw, i))
    assert abs(hi - lo) <= 1e-13 * scale
