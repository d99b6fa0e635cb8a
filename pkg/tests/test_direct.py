from fractions import Fraction

import numpy as np
import pytest

from smpmoments import (
    SmpModel,
    UnreachableTarget,
    build_free_terms,
    green_matrix,
    green_moments,
    hitting_moments,
    solve_moments,
)
from smpmoments.errors import MissingLowerMoments, OrderOutOfRange

F = Fraction


def test_free_terms_order_one_are_row_sums(example_model):
    f = build_free_terms(example_model, 0, 1, [np.ones(4, dtype=object)])
    assert list(f) == [1, 4, 3, 2]
    assert list(f) == [sum(example_model.moments[1, i]) for i in range(4)]


def test_free_terms_zero_rewards():
    p = [[0, 1], [F(1, 2), F(1, 2)]]
    model = SmpModel.from_matrices(p, [[[0, 0], [0, 0]]])
    f = build_free_terms(model, 0, 1, [np.ones(2, dtype=object)])
    assert list(f) == [0, 0]


def test_free_terms_errors(example_model):
    with pytest.raises(MissingLowerMoments):
        build_free_terms(example_model, 0, 2, [np.ones(4)])
    with pytest.raises(OrderOutOfRange):
        build_free_terms(example_model, 0, 3, [np.ones(4)] * 3)


def test_solve_moments_example(example_model):
    table = solve_moments(example_model, 0)
    assert [table[1, i] for i in range(4)] == [64, 46, 59, 63]
    assert [table[2, i] for i in range(4)] == [7265, 5084, 6642, 7138]
    assert np.all(table.values == hitting_moments(example_model, 0).values)


def test_two_state_alternating():
    model = SmpModel.from_matrices([[0, 1], [1, 0]], [[[0, 1], [1, 0]]])
    assert solve_moments(model, 0)[1, 1] == 1
    g = green_matrix(model, 0)
    assert g.g.shape == (1, 1) and g[1, 1] == 1


def test_green_matrix_example(example_model):
    g = green_matrix(example_model, 0)
    assert g.states == (1, 2, 3)
    assert g.g.tolist() == [[4, 6, 6], [4, 9, 8], [4, 9, 10]]
    assert list(g.expected_steps(example_model)) == [24, 16, 21, 23]
    assert np.all(green_moments(example_model, 0).values == solve_moments(example_model, 0).values)


def test_green_geometric_occupation():
    eps = F(1, 7)
    p = [[0, 1], [eps, 1 - eps]]
    model = SmpModel.from_matrices(p, [p])
    assert green_matrix(model, 0)[1, 1] == 1 / eps


def test_float_mode_agrees(example_float, example_model):
    exact = np.asarray(solve_moments(example_model, 0).values, dtype=float)
    np.testing.assert_allclose(solve_moments(example_float, 0).values, exact, rtol=1e-12)
    np.testing.assert_allclose(green_moments(example_float, 0).values, exact, rtol=1e-12)


def test_unreachable_target():
    p = [[0, 1, 0], [0, 1, 0], [F(1, 2), 0, F(1, 2)]]
    model = SmpModel.from_matrices(p, [p])
    with pytest.raises(UnreachableTarget):
        solve_moments(model, 0)
    with pytest.raises(UnreachableTarget):
        green_matrix(model, 0)
