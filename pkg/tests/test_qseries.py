import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mockcong.catalog import partition_series
from mockcong.qseries import (
    ModulusMismatch,
    WindowError,
    cell_dtype,
    geometric_divide,
    geometric_multiply,
    monomial,
    one,
    pochhammer,
    reduce_mod,
    restrict,
    schoolbook_mul,
    series,
    series_mul,
    series_scale,
    series_sub,
    zero,
)

from oracles import poly_mul


def coeff_lists(max_len=40, lo=-50, hi=50):
    return st.lists(st.integers(lo, hi), min_size=1, max_size=max_len)


moduli = st.sampled_from([None, 2, 5, 7, 125, 13**2, 2**31 - 1, 10**10 + 19])


# --- construction and invariants ------------------------------------------------


def test_window_invariant():
    s = series([1, 2, 3], val=-2, trunc=5)
    assert s.val == -2 and s.trunc == 5
    assert s.val + len(s.coeffs) == s.trunc


def test_residues_stored_in_range():
    s = series([-1, 7, 12], modulus=5)
    assert s.to_list() == [4, 2, 2]


def test_cell_width_holds_square():
    assert cell_dtype(5) == np.uint8
    assert cell_dtype(13) == np.uint8
    assert cell_dtype(17) == np.uint16
    assert cell_dtype(125) == np.uint16
    assert cell_dtype(65521) == np.uint32
    assert cell_dtype(2**31 - 1) == np.uint64
    assert cell_dtype(None) == object
    # squares beyond int64 fall back to Python integers
    assert cell_dtype(2**40) == object


def test_coefficient_window():
    s = series([1, 2], val=3, trunc=6)
    assert s[0] == 0
    assert s[3] == 1
    assert s[5] == 0
    with pytest.raises(WindowError):
        s[6]


def test_series_is_immutable():
    s = series([1, 2, 3])
    with pytest.raises(ValueError):
        s.coeffs[0] = 5


# --- spec examples ----------------------------------------------------------------


def test_add_cancellation():
    assert series([1, 1]) + series([1, -1]) == series([2, 0])


def test_add_zero_identity():
    s = series([3, 1, 4, 1, 5])
    assert s + zero(5) == s


def test_add_mod5():
    assert series([0, 4], modulus=5) + series([0, 3], modulus=5) == series([0, 2], modulus=5)


def test_add_window_rules():
    s = series([1, 1, 1], val=-1)
    t = series([1, 1, 1, 1, 1], val=0)
    u = s + t
    assert u.val == -1 and u.trunc == 2
    assert u.to_list() == [1, 2, 2]


def test_add_modulus_mismatch():
    with pytest.raises(ModulusMismatch):
        series([1], modulus=5) + series([1], modulus=7)
    with pytest.raises(ModulusMismatch):
        series([1]) + series([1], modulus=7)


def test_mul_difference_of_squares():
    assert (series([1, 1], trunc=6) * series([1, -1], trunc=6)).to_list() == [1, 0, -1, 0, 0, 0]


def test_mul_identity():
    s = series([2, 7, 1, 8, 2, 8])
    assert s * one(6) == s


def test_mul_q_pochhammer_2():
    s = series([1, -1], trunc=8) * series([1, 0, -1], trunc=8)
    assert s.to_list()[:4] == [1, -1, -1, 1]
    assert all(c == 0 for c in s.to_list()[4:])


def test_mul_window():
    s = series([1, 2, 3], val=-1)  # trunc 2
    t = series([1, 1, 1, 1, 1], val=2)  # trunc 7
    u = s * t
    assert u.val == 1
    assert u.trunc == min(s.trunc + t.val, t.trunc + s.val) == 4


def test_mul_empty_window():
    with pytest.raises(WindowError):
        series_mul(zero(3, 3), series([1, 2]))


def test_geometric_divide_one():
    assert geometric_divide(one(6), 1).to_list() == [1] * 6


def test_geometric_divide_inverse_pair():
    assert geometric_divide(series([1, -1], trunc=10), 1) == one(10)


def test_partition_display():
    s = one(6)
    for n in range(1, 6):
        s = geometric_divide(s, n)
    assert s.to_list() == [1, 1, 2, 3, 5, 7]


def test_geometric_multiply():
    assert geometric_multiply(one(6), 3).to_list() == [1, 0, 0, -1, 0, 0]


def test_geometric_multiply_mod5_matches_exact():
    exact = series([1, 1, 2, 3, 5])
    modular = reduce_mod(exact, 5)
    assert geometric_multiply(modular, 1) == reduce_mod(geometric_multiply(exact, 1), 5)
    assert geometric_multiply(modular, 1).to_list() == [1, 0, 1, 1, 2]


@pytest.mark.parametrize("m", [0, -3])
def test_geometric_rejects_nonpositive(m):
    with pytest.raises(ValueError):
        geometric_divide(one(4), m)
    with pytest.raises(ValueError):
        geometric_multiply(one(4), m)


def test_pochhammer_empty():
    assert pochhammer(1, 1, 1, 0, 6) == one(6)


def test_pochhammer_q_q_2():
    assert pochhammer(1, 1, 1, 2, 6).to_list() == [1, -1, -1, 1, 0, 0]


def test_pochhammer_minus_q():
    assert pochhammer(-1, 1, 1, 1, 4).to_list() == [1, 1, 0, 0]


def test_pochhammer_q_q2():
    # (q; q^2)_3 = (1-q)(1-q^3)(1-q^5)
    expect = poly_mul(poly_mul([1, -1], [1, 0, 0, -1], 12), [1, 0, 0, 0, 0, -1], 12)
    assert pochhammer(1, 1, 2, 3, 12).to_list() == expect


def test_reduce_mod_example():
    assert reduce_mod(series([0, 0, 0, 0, 5, 7]), 5).to_list() == [0, 0, 0, 0, 0, 2]


def test_reduce_mod_idempotent():
    s = reduce_mod(series(list(range(-20, 20))), 7)
    assert reduce_mod(s, 7) == s


def test_reduce_mod_incompatible():
    with pytest.raises(ModulusMismatch):
        reduce_mod(series([1, 2], modulus=6), 4)
    assert reduce_mod(series([1, 7], modulus=6), 3).to_list() == [1, 1]


def test_partition_mod5_q4():
    assert partition_series(10, 5)[4] == 0


def test_restrict_never_extends():
    s = series([1, 2, 3], val=1)
    r = restrict(s, -1, 4)
    assert r.to_list() == [0, 0, 1, 2, 3]
    with pytest.raises(WindowError):
        restrict(s, 0, 5)


def test_big_modulus_object_path():
    m = 2**64 + 13
    s = series([m - 1, 5], modulus=m)
    assert (s * s).to_list() == [1, (-10) % m]


# --- properties -----------------------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(coeff_lists(), coeff_lists(), coeff_lists(), moduli)
def test_ring_axioms(a, b, c, m):
    n = min(len(a), len(b), len(c))
    s, t, u = (series(x[:n], modulus=m) for x in (a, b, c))
    assert s + t == t + s
    assert s * t == t * s
    assert (s + t) + u == s + (t + u)
    assert (s * t) * u == s * (t * u)
    assert s * (t + u) == s * t + s * u


@settings(max_examples=60, deadline=None)
@given(coeff_lists(200, -10**6, 10**6), coeff_lists(200, -10**6, 10**6), moduli,
       st.integers(-5, 5), st.integers(-5, 5))
def test_mul_matches_schoolbook(a, b, m, va, vb):
    s, t = series(a, va, m), series(b, vb, m)
    assert series_mul(s, t) == schoolbook_mul(s, t)


@settings(max_examples=60, deadline=None)
@given(coeff_lists(60), st.integers(1, 12), moduli, st.booleans())
def test_geometric_round_trip(a, k, m, plus):
    s = series(a, modulus=m)
    assert geometric_multiply(geometric_divide(s, k, plus=plus), k, plus=plus) == s
    assert geometric_divide(geometric_multiply(s, k, plus=plus), k, plus=plus) == s


@settings(max_examples=60, deadline=None)
@given(coeff_lists(60, -10**9, 10**9), coeff_lists(60, -10**9, 10**9), st.integers(1, 9),
       st.sampled_from([5, 7, 125, 13**3, 2**31 - 1, 2**70 + 25]))
def test_exact_then_reduce_equals_modular(a, b, k, m):
    n = min(len(a), len(b))
    s, t = series(a[:n]), series(b[:n])
    sm, tm = reduce_mod(s, m), reduce_mod(t, m)
    assert reduce_mod(s + t, m) == sm + tm
    assert reduce_mod(s - t, m) == sm - tm
    assert reduce_mod(s * t, m) == sm * tm
    assert reduce_mod(series_scale(s, -3), m) == series_scale(sm, -3)
    assert reduce_mod(geometric_divide(s, k), m) == geometric_divide(sm, k)
    assert reduce_mod(geometric_multiply(s, k, plus=True), m) == geometric_multiply(sm, k, plus=True)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([1, -1]), st.integers(1, 5), st.integers(1, 4), st.integers(0, 8), moduli)
def test_pochhammer_matches_products(sign, a, b, n, m):
    T = 40
    expect = one(T, m)
    for k in range(n):
        factor = series_sub(one(T, m), monomial(a + k * b, T, sign, m)) if a + k * b < T else one(T, m)
        expect = restrict(expect * factor, 0, T)
    assert pochhammer(sign, a, b, n, T, m) == expect
