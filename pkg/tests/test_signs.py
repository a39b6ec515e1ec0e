import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from spatialhl.errors import InvalidInput
from spatialhl.signs import (WalshStream, as_data, sign_hessian, sign_outer, signed_rank_fn,
                             signed_rank_scores, spatial_sign, spatial_signs, walsh_averages)

from conftest import random_orthogonal

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
vectors = st.integers(2, 6).flatmap(lambda p: arrays(np.float64, p, elements=finite))


@pytest.mark.parametrize("y, expected", [
    ((3.0, 4.0), (0.6, 0.8)),
    ((0.0, 0.0), (0.0, 0.0)),
    ((0.3, 0.4), (0.6, 0.8)),
    ((3e7, 4e7), (0.6, 0.8)),
])
def test_spatial_sign_examples(y, expected):
    np.testing.assert_allclose(spatial_sign(y), expected, rtol=1e-15)


@pytest.mark.parametrize("y, expected", [
    ((1.0, 0.0), [[0, 0], [0, 1]]),
    ((0.0, 0.0), [[0, 0], [0, 0]]),
    ((2.0, 0.0), [[0, 0], [0, 0.5]]),
])
def test_sign_hessian_examples(y, expected):
    np.testing.assert_allclose(sign_hessian(y), expected, atol=1e-15)


@pytest.mark.parametrize("y, expected", [
    ((1.0, 0.0), [[1, 0], [0, 0]]),
    ((1.0, 1.0), [[0.5, 0.5], [0.5, 0.5]]),
    ((0.0, 0.0), [[0, 0], [0, 0]]),
])
def test_sign_outer_examples(y, expected):
    np.testing.assert_allclose(sign_outer(y), expected, atol=1e-15)


@given(vectors, st.integers(0, 2**32 - 1))
def test_sign_rotation_equivariant(y, seed):
    o = random_orthogonal(np.random.default_rng(seed), len(y))
    np.testing.assert_allclose(spatial_sign(o @ y), o @ spatial_sign(y), atol=1e-12)


@given(vectors)
def test_hessian_and_outer_identities(y):
    r = np.linalg.norm(y)
    if r == 0.0:
        assert not np.any(sign_hessian(y)) and not np.any(sign_outer(y))
        return
    assert np.linalg.norm(sign_hessian(y) @ y) <= 1e-12 * max(1.0, r)
    assert abs(np.trace(sign_outer(y)) - 1.0) <= 1e-12
    expected = (np.eye(len(y)) - sign_outer(y)) / r
    np.testing.assert_allclose(sign_hessian(y), expected, atol=1e-12 / min(1.0, r))
    w = np.linalg.eigvalsh(sign_hessian(y))
    assert w[0] >= -1e-12 / r


def test_spatial_signs_rows():
    u = spatial_signs(np.array([[3.0, 4.0], [0.0, 0.0], [0.0, -2.0]]))
    np.testing.assert_allclose(u, [[0.6, 0.8], [0.0, 0.0], [0.0, -1.0]])


def test_as_data_rejects_bad_input():
    with pytest.raises(InvalidInput):
        as_data(np.ones((3, 1)))
    with pytest.raises(InvalidInput):
        as_data(np.array([[1.0, np.nan], [0.0, 1.0]]))
    with pytest.raises(InvalidInput):
        as_data(np.ones(3))
    with pytest.raises(InvalidInput):
        walsh_averages(np.ones((1, 2)))


def test_walsh_examples():
    w = walsh_averages(np.array([[0.0, 0.0], [2.0, 2.0]]))
    assert len(w) == 1
    np.testing.assert_array_equal(list(w), [[1.0, 1.0]])
    a, b, c = np.array([1.0, 2.0]), np.array([-3.0, 0.5]), np.array([4.0, 4.0])
    w = walsh_averages(np.array([a, b, c]))
    assert len(w) == 3
    np.testing.assert_array_equal(w.collect(), [(a + b) / 2, (a + c) / 2, (b + c) / 2])
    assert len(walsh_averages(np.zeros((10, 2)))) == 45


def test_walsh_pairs_lexicographic():
    w = walsh_averages(np.arange(10.0).reshape(5, 2))
    idx = [(i, j) for i, j, _ in w.pairs()]
    assert idx == list(itertools.combinations(range(5), 2))


def test_walsh_shift_is_exact():
    y = np.arange(12.0).reshape(6, 2)
    a = np.array([2.0, -4.0])
    np.testing.assert_array_equal(walsh_averages(y + a).collect(), walsh_averages(y).collect() + a)


def test_signed_rank_fn_examples():
    np.testing.assert_array_equal(signed_rank_fn(np.array([[2.0, 0.0], [2.0, 0.0]]), [2.0, 0.0]), [1.0, 0.0])
    v = np.array([1.5, -2.0])
    np.testing.assert_array_equal(signed_rank_fn(np.array([v, -v]), [0.0, 0.0]), [0.0, 0.0])


def test_signed_rank_fn_direct_summation():
    y = np.random.default_rng(5).standard_normal((5, 2))
    e = np.zeros(2)
    brute = sum(((y[i] + e) / 2) / np.linalg.norm((y[i] + e) / 2) for i in range(5)) / 5
    np.testing.assert_allclose(signed_rank_fn(y, e), brute, atol=1e-15)
    e = np.array([0.3, -0.1])
    brute = sum(((y[i] + e) / 2) / np.linalg.norm((y[i] + e) / 2) for i in range(5)) / 5
    np.testing.assert_allclose(signed_rank_fn(y, e), brute, atol=1e-15)


@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.integers(2, 5))
def test_signed_rank_fn_bounded(seed, n, p):
    y = np.random.default_rng(seed).standard_normal((n, p))
    assert np.linalg.norm(signed_rank_fn(y, y[0])) <= 1.0 + 1e-12


def _brute_sweep(y, c):
    n = len(y)
    out = {"sign": 0.0, "inv": 0.0, "norm": 0.0, "left": np.zeros_like(y), "right": np.zeros_like(y)}
    for i, j in itertools.combinations(range(n), 2):
        z = (y[i] + y[j]) / 2 - c
        r = np.linalg.norm(z)
        out["norm"] += r
        if r > 0:
            out["sign"] = out["sign"] + z / r
            out["inv"] += 1 / r
            out["left"][j] += z / r
            out["right"][i] += z / r
    return out


@pytest.mark.parametrize("n, p", [(2, 2), (7, 3), (40, 5)])
def test_sweep_matches_brute_force(n, p):
    rng = np.random.default_rng(n * p)
    y = rng.standard_normal((n, p))
    c = rng.standard_normal(p) * 0.1
    s = WalshStream(y).sweep(c)
    b = _brute_sweep(y, c)
    np.testing.assert_allclose(s.sign_sum, b["sign"], atol=1e-11)
    np.testing.assert_allclose(s.sum_inv, b["inv"], rtol=1e-12)
    np.testing.assert_allclose(s.sum_norm, b["norm"], rtol=1e-12)
    np.testing.assert_allclose(s.left, b["left"], atol=1e-12)
    np.testing.assert_allclose(s.right, b["right"], atol=1e-12)
    assert s.n_zero == 0


def test_sweep_blocks_cover_all_rows():
    from spatialhl import signs
    y = np.random.default_rng(2).standard_normal((30, 2))
    old = signs._BLOCK_ENTRIES
    try:
        signs._BLOCK_ENTRIES = 64  # forces 2-row blocks
        small = WalshStream(y).sweep(np.ones(2))
    finally:
        signs._BLOCK_ENTRIES = old
    full = WalshStream(y).sweep(np.ones(2))
    np.testing.assert_allclose(small.sign_sum, full.sign_sum, atol=1e-12)
    np.testing.assert_allclose(small.left, full.left, atol=1e-13)


def test_sweep_counts_zero_walsh_averages():
    v = np.array([1.0, 2.0])
    s = WalshStream(np.array([v, -v, [3.0, 0.0]])).sweep()
    assert s.n_zero == 1 and s.first_zero == (0, 1)


def test_sweep_near_cancellation_is_accurate():
    # e_i + e_j tiny relative to |e_i|: the Gram formula alone would lose all digits
    y = np.array([[1e4, 1.0], [-1e4, -1.0 + 1e-6], [5.0, 3.0]])
    s = WalshStream(y).sweep()
    expected = np.linalg.norm((y[0] + y[1]) / 2)
    assert s.nearest == (0, 1)
    np.testing.assert_allclose(s.nearest_dist, expected, rtol=1e-9)


def test_outer_sum_matches_brute_force():
    y = np.random.default_rng(3).standard_normal((9, 3))
    c = np.array([0.1, 0.0, -0.2])
    for k in (2, 3):
        s = WalshStream(y).sweep(c, outer_power=k)
        brute = sum(np.outer(z, z) / np.linalg.norm(z) ** k
                    for z in ((y[i] + y[j]) / 2 - c for i, j in itertools.combinations(range(9), 2)))
        np.testing.assert_allclose(s.outer_sum(), brute, atol=1e-12)


def test_signed_rank_scores_include_self_pair():
    y = np.random.default_rng(4).standard_normal((6, 2))
    q = signed_rank_scores(y)
    for i in range(6):
        np.testing.assert_allclose(q[i], signed_rank_fn(y, y[i]), atol=1e-14)
