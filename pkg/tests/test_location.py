import itertools
from math import comb

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spatialhl import location
from spatialhl.errors import InvalidInput
from spatialhl.location import (SolverConfig, ahat_hl, ahat_median, bhat_hl, bhat_median,
                                hl_estimator, objective_hl, objective_median, spatial_median)

from conftest import random_orthogonal
from oracles import brute_bhat_triples, d1, d2, nelder_mead, walsh

AXES = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])


def test_solver_config_validation():
    with pytest.raises(InvalidInput):
        SolverConfig(tol=0.0)
    with pytest.raises(InvalidInput):
        SolverConfig(max_iter=0)


def test_spatial_median_symmetric_axes():
    fit = spatial_median(AXES)
    np.testing.assert_allclose(fit.estimate, [0.0, 0.0], atol=1e-12)
    assert fit.converged


def test_spatial_median_equilateral_triangle():
    tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3) / 2]])
    fit = spatial_median(tri)
    np.testing.assert_allclose(fit.estimate, [0.5, np.sqrt(3) / 6], atol=1e-9)


def test_spatial_median_seven_points_vs_nelder_mead():
    y = np.random.default_rng(7).standard_normal((7, 2))
    fit = spatial_median(y)
    ref = nelder_mead(lambda m: d1(y, m), np.zeros(2))
    np.testing.assert_allclose(fit.estimate, ref, atol=1e-4)
    assert fit.objective <= d1(y, ref) + 1e-12


def test_spatial_median_optimum_on_a_data_point():
    y = np.array([[0.0, 0.0]] * 5 + [[1.0, 0.0], [0.0, 1.0], [-1.0, -1.0]])
    fit = spatial_median(y)
    np.testing.assert_array_equal(fit.estimate, [0.0, 0.0])
    assert fit.converged and fit.iterations < 20


def test_hl_two_points_is_midpoint():
    y = np.array([[1.0, -3.0], [4.0, 5.0]])
    fit = hl_estimator(y)
    np.testing.assert_array_equal(fit.estimate, [2.5, 1.0])


def test_hl_centrally_symmetric():
    v, w = np.array([1.0, 2.0]), np.array([-3.0, 0.5])
    fit = hl_estimator(np.array([v, -v, w, -w]))
    np.testing.assert_allclose(fit.estimate, [0.0, 0.0], atol=1e-12)


def test_hl_eight_points_3d_vs_materialized_walsh():
    y = np.random.default_rng(8).standard_normal((8, 3))
    fit = hl_estimator(y)
    z = walsh(y)
    assert len(z) == 28
    ref = nelder_mead(lambda m: d1(z, m), np.median(z, axis=0))
    np.testing.assert_allclose(fit.estimate, ref, atol=1e-4)
    np.testing.assert_allclose(fit.objective, d2(y, fit.estimate), atol=1e-13)


def test_degenerate_data():
    y = np.tile([1.5, -2.0], (6, 1))
    for est in (spatial_median, hl_estimator):
        fit = est(y)
        np.testing.assert_array_equal(fit.estimate, [1.5, -2.0])
        np.testing.assert_array_equal(fit.cov_of_estimate, np.zeros((2, 2)))
        assert fit.converged


def test_nonconvergence_reported_not_raised():
    y = np.random.default_rng(1).standard_normal((30, 3))
    fit = spatial_median(y, SolverConfig(max_iter=1))
    assert not fit.converged and fit.iterations == 1


def test_empty_input():
    with pytest.raises(InvalidInput):
        spatial_median(np.zeros((0, 2)))


@pytest.mark.parametrize("est", [spatial_median, hl_estimator])
def test_objective_trace_non_increasing(est):
    y = np.random.default_rng(11).standard_t(3, (60, 4))
    fit = est(y)
    t = np.array(fit.objective_trace)
    assert np.all(np.diff(t) <= 1e-12 * (1.0 + np.abs(t[:-1])))


@pytest.mark.parametrize("est, obj", [(spatial_median, objective_median), (hl_estimator, objective_hl)])
def test_gradient_small_at_solution(est, obj):
    y = np.random.default_rng(12).standard_normal((50, 3))
    fit = est(y)
    assert fit.grad_norm <= 1e-6
    assert abs(fit.objective - obj(y, fit.estimate)) <= 1e-12


@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3, 5]), st.integers(5, 25))
def test_rotation_shift_equivariance(seed, p, n):
    rng = np.random.default_rng(seed)
    y = rng.standard_normal((n, p))
    o = random_orthogonal(rng, p)
    a = rng.standard_normal(p) * 3
    for est in (spatial_median, hl_estimator):
        base = est(y, covariance=False).estimate
        moved = est(y @ o.T + a, covariance=False).estimate
        np.testing.assert_allclose(moved, o @ base + a, atol=1e-7)


def test_non_equivariance_witness():
    from spatialhl.transret import WITNESS_POINTS, WITNESS_STRETCH
    d = WITNESS_STRETCH
    base = hl_estimator(WITNESS_POINTS).estimate
    moved = hl_estimator(WITNESS_POINTS @ d.T).estimate
    assert np.linalg.norm(moved - d @ base) > 0.01


def test_gradient_identity_finite_differences():
    y = np.random.default_rng(13).standard_normal((15, 3))
    stream = location.WalshStream(y)
    for mu in np.random.default_rng(14).normal(0, 0.2, (5, 3)):
        analytic = -stream.sweep(mu).sign_sum / comb(15, 2)
        h = 1e-5
        fd = np.array([(objective_hl(y, mu + h * e) - objective_hl(y, mu - h * e)) / (2 * h)
                       for e in np.eye(3)])
        assert np.linalg.norm(fd - analytic) <= 1e-5 * np.linalg.norm(analytic)


# sandwich ingredients

def test_median_ingredients_axes():
    np.testing.assert_allclose(bhat_median(AXES, np.zeros(2)), np.eye(2) / 2)
    np.testing.assert_allclose(ahat_median(AXES, np.zeros(2)), np.eye(2) / 2)


def test_median_ingredients_collinear():
    r = np.array([0.5, 1.0, 2.0, 4.0])
    y = np.column_stack([r, np.zeros(4)])
    np.testing.assert_allclose(bhat_median(y, np.zeros(2)), np.diag([1.0, 0.0]))
    np.testing.assert_allclose(ahat_median(y, np.zeros(2)), np.diag([0.0, np.mean(1 / r)]))


def test_median_ingredients_direct_summation():
    y = np.random.default_rng(15).standard_normal((9, 3))
    c = np.array([0.1, -0.2, 0.05])
    a = np.zeros((3, 3))
    b = np.zeros((3, 3))
    for e in y - c:
        r = np.linalg.norm(e)
        a += (np.eye(3) - np.outer(e, e) / r**2) / r
        b += np.outer(e, e) / r**2
    np.testing.assert_allclose(ahat_median(y, c), a / 9, atol=1e-14)
    np.testing.assert_allclose(bhat_median(y, c), b / 9, atol=1e-14)
    assert abs(np.trace(bhat_median(y, c)) - 1.0) < 1e-14


def test_bhat_median_trace_below_one_with_zero_residual():
    y = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]])
    assert np.trace(bhat_median(y, np.zeros(2))) == pytest.approx(2 / 3)


def test_ahat_hl_symmetric_and_collinear():
    y = np.array([[2.0, 0.0], [-2.0, 0.0], [0.0, 2.0], [0.0, -2.0]])
    a = ahat_hl(y, np.zeros(2))
    np.testing.assert_allclose(a, a.T)
    np.testing.assert_allclose(a[0, 1], 0.0, atol=1e-15)
    np.testing.assert_allclose(a[0, 0], a[1, 1])
    r = np.array([1.0, 2.0, 3.0])
    y = np.column_stack([r, np.zeros(3)])
    radii = [(r[i] + r[j]) / 2 for i, j in itertools.combinations(range(3), 2)]
    np.testing.assert_allclose(ahat_hl(y, np.zeros(2)), np.diag([0.0, np.mean(1 / np.array(radii))]), atol=1e-15)


def test_ahat_hl_direct_summation():
    y = np.random.default_rng(16).standard_normal((10, 3))
    c = np.array([0.2, 0.0, -0.1])
    z = walsh(y) - c
    ref = sum((np.eye(3) - np.outer(v, v) / (v @ v)) / np.linalg.norm(v) for v in z) / len(z)
    np.testing.assert_allclose(ahat_hl(y, c), ref, atol=1e-13)


@pytest.mark.parametrize("mode", ["exact", "rank", "subsample=50", ("subsample", 10)])
def test_bhat_hl_collinear_every_mode(mode):
    y = np.column_stack([np.arange(1.0, 7.0), np.zeros(6)])
    np.testing.assert_allclose(bhat_hl(y, np.zeros(2), mode), np.diag([1.0, 0.0]), atol=1e-14)


@pytest.mark.parametrize("mode", ["exact", "rank"])
def test_bhat_hl_axis_symmetric_offdiagonal(mode):
    y = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 2.0], [0.0, -2.0], [3.0, 0.0], [-3.0, 0.0]])
    b = bhat_hl(y, np.zeros(2), mode)
    assert abs(b[0, 1]) < 1e-14


def test_bhat_hl_exact_vs_triple_loop():
    y = np.random.default_rng(12).standard_normal((12, 3))
    c = np.zeros(3)
    exact = bhat_hl(y, c, "exact")
    brute = brute_bhat_triples(y, c)
    np.testing.assert_allclose(exact, brute, atol=1e-14)
    assert np.linalg.norm(bhat_hl(y, c, "rank") - exact) <= 0.15


def test_bhat_hl_subsample():
    y = np.random.default_rng(17).standard_normal((40, 3))
    c = np.zeros(3)
    exact = bhat_hl(y, c, "exact")
    sub = bhat_hl(y, c, "subsample=5000", seed=3)
    assert np.linalg.norm(sub - exact) < 0.05
    np.testing.assert_array_equal(sub, bhat_hl(y, c, "subsample=5000", seed=3))
    # asking for at least every triple is the exact statistic
    np.testing.assert_allclose(bhat_hl(y, c, ("subsample", comb(40, 3))), exact, atol=1e-15)


def test_unrank_triples_is_lexicographic_bijection():
    n = 7
    i, j, k = location._unrank_triples(np.arange(comb(n, 3)), n)
    triples = sorted(zip(i.tolist(), j.tolist(), k.tolist()), key=lambda t: (t[2], t[1], t[0]))
    assert sorted(triples) == sorted(itertools.combinations(range(n), 3))


@pytest.mark.parametrize("mode", ["bogus", "subsample=x", "subsample=0"])
def test_bhat_bad_mode(mode):
    with pytest.raises(InvalidInput):
        bhat_hl(np.random.default_rng(0).standard_normal((5, 2)), np.zeros(2), mode)


def test_bhat_exact_needs_three_rows():
    y = np.array([[1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(InvalidInput):
        bhat_hl(y, np.zeros(2), "exact")
    assert bhat_hl(y, np.zeros(2)).shape == (2, 2)


@pytest.mark.parametrize("est", [spatial_median, hl_estimator])
def test_covariance_symmetric_psd(est):
    y = np.random.default_rng(18).standard_normal((80, 3))
    cov = est(y).cov_of_estimate
    np.testing.assert_array_equal(cov, cov.T)
    assert np.linalg.eigvalsh(cov)[0] > 0


def test_hl_covariance_uses_factor_four():
    y = np.random.default_rng(19).standard_normal((60, 2))
    fit = hl_estimator(y, bhat_mode="rank")
    a = ahat_hl(y, fit.estimate)
    b = bhat_hl(y, fit.estimate, "rank")
    ai = np.linalg.inv(a)
    np.testing.assert_allclose(fit.cov_of_estimate, 4 * ai @ b @ ai / 60, rtol=1e-10)


def test_to_dict_keys():
    d = spatial_median(AXES).to_dict()
    assert set(d) == {"estimate", "covariance", "iterations", "converged"}
