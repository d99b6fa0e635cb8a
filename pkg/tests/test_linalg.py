from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smpmoments import MalformedDocument, SingularSystem
from smpmoments import scalar
from smpmoments.linalg import inverse, solve

F = Fraction


def _frac_matrix(rows):
    return scalar.as_array(rows, scalar.RATIONAL)


def test_exact_solve_small():
    a = _frac_matrix([[2, 1], [1, 3]])
    x = solve(a, _frac_matrix([[3], [5]])[:, 0])
    assert list(x) == [F(4, 5), F(7, 5)]


def test_exact_solve_needs_row_swap():
    a = _frac_matrix([[0, 1], [1, 0]])
    assert list(solve(a, _frac_matrix([[2], [3]])[:, 0])) == [3, 2]


def test_singular_exact_and_float():
    a = _frac_matrix([[1, 2], [2, 4]])
    with pytest.raises(SingularSystem):
        solve(a, _frac_matrix([[1], [1]])[:, 0])
    with pytest.raises(SingularSystem):
        solve(np.array([[1.0, 2.0], [2.0, 4.0]]), np.ones(2))


def test_inverse_exact():
    a = _frac_matrix([[F(1, 2), F(-1, 4)], [0, F(2, 3)]])
    inv = inverse(a)
    prod = a.dot(inv)
    assert all(prod[i, j] == (1 if i == j else 0) for i in range(2) for j in range(2))


def test_empty_system():
    assert solve(np.zeros((0, 0)), np.zeros(0)).shape == (0,)


small_int = st.integers(-9, 9)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6).flatmap(lambda n: st.tuples(st.just(n), st.lists(small_int, min_size=n * n, max_size=n * n), st.lists(small_int, min_size=n, max_size=n))))
def test_exact_solution_satisfies_system(case):
    n, entries, rhs = case
    a = _frac_matrix(np.array(entries).reshape(n, n).tolist())
    # diagonal dominance keeps the system regular
    for i in range(n):
        a[i, i] = a[i, i] + 10 * n
    b = _frac_matrix([[v] for v in rhs])[:, 0]
    x = solve(a, b)
    assert all(sum(a[i, j] * x[j] for j in range(n)) == b[i] for i in range(n))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.integers(0, 10**6))
def test_float_matches_numpy(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n)) + n * np.eye(n)
    b = rng.normal(size=(n, 2))
    np.testing.assert_allclose(solve(a, b), np.linalg.solve(a, b), rtol=1e-10, atol=1e-12)


def test_scalar_parsing():
    assert scalar.parse_scalar("3/4") == F(3, 4)
    assert scalar.parse_scalar(0.1) == F(1, 10)
    assert scalar.parse_scalar("1/3", scalar.FLOAT) == pytest.approx(1 / 3)
    for bad in (True, "abc", float("nan"), None, "1/0"):
        with pytest.raises(MalformedDocument):
            scalar.parse_scalar(bad)


def test_formatting():
    assert scalar.format_scalar(F(10, 3)) == "10/3"
    assert scalar.format_scalar(2 / 3) == "0.666666666667"
    assert scalar.jsonable(F(4)) == 4
    assert scalar.jsonable(F(1, 4)) == "1/4"


def test_rel_discrepancy():
    assert scalar.rel_discrepancy([1.0, 0.0], [1.0, 0.0]) == 0.0
    assert scalar.rel_discrepancy([2.0], [1.0]) == pytest.approx(0.5)
    a = _frac_matrix([[1, 2]])
    assert scalar.rel_discrepancy(a, a) == 0.0
