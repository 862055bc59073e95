from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nilsoliton import exact
from oracles import has_positive_solution


def test_kernel_of_identity_is_empty():
    assert exact.kernel(exact.identity(3), 3) == []


def test_kernel_of_zero_matrix():
    assert len(exact.kernel(exact.zeros(2, 3), 3)) == 3


def test_kernel_of_h3_Y():
    ker = exact.kernel([[1, 1, -1]], 3)
    assert len(ker) == 2
    for v in ker:
        assert v[0] + v[1] - v[2] == 0


def test_solve_affine_identity():
    sol = exact.solve_affine(exact.identity(3), [F(1), F(-2), F(5, 3)])
    assert sol.particular == [1, -2, F(5, 3)]
    assert sol.dim == 0


def test_solve_affine_h3_gram():
    sol = exact.solve_affine([[3]], [1])
    assert sol.particular == [F(1, 3)]


def test_inconsistent_system_is_infeasible():
    sol = exact.solve_affine([[1, 1], [1, 1]], [0, 1])
    assert not sol
    # the row combination is a Farkas-style witness: y A = 0, y b != 0
    y = sol.row_combination
    assert y[0] + y[1] == 0
    assert y[0] * 0 + y[1] * 1 != 0


@pytest.mark.parametrize("A,b,expected", [
    ([[3]], [1], True),
    ([[1, -1]], [1], True),
    ([[1, 1]], [-1], False),
    ([[1, 0], [0, 1]], [1, 0], False),
])
def test_positive_solution_small_cases(A, b, expected):
    sol = exact.positive_solution(A, b)
    assert bool(sol) is expected
    if sol:
        assert all(x > 0 for x in sol.alpha)
        assert exact.matvec(exact.matrix(A), sol.alpha) == [F(x) for x in b]
    else:
        assert exact.check_emptiness_certificate(exact.matrix(A), b, sol.certificate)


def test_positive_solution_scalar():
    assert exact.positive_solution([[3]], [1]).alpha == [F(1, 3)]


def test_projection_examples():
    assert exact.project_onto_subspace([1, 1, 1], [[1, 1, -1]]) == [F(1, 3), F(1, 3), F(-1, 3)]
    assert exact.project_onto_subspace([2, 2, -2], [[1, 1, -1]]) == [2, 2, -2]
    assert exact.project_onto_subspace([1, -1, 0], [[1, 1, -1]]) == [0, 0, 0]


def test_inverse_roundtrip():
    A = exact.matrix([[2, 1, 0], [1, 3, 1], [0, 1, 4]])
    assert exact.matmul(A, exact.inverse(A)) == exact.identity(3)


small = st.fractions(min_value=-3, max_value=3, max_denominator=3)


@st.composite
def systems(draw):
    m = draw(st.integers(1, 3))
    n = draw(st.integers(1, 4))
    A = [[draw(small) for _ in range(n)] for _ in range(m)]
    b = [draw(small) for _ in range(m)]
    return A, b


@settings(max_examples=150, deadline=None)
@given(systems())
def test_positive_solution_matches_linprog(sys_):
    A, b = sys_
    sol = exact.positive_solution(A, b)
    if sol:
        assert all(x > 0 for x in sol.alpha)
        assert exact.matvec(exact.matrix(A), sol.alpha) == [F(x) for x in b]
    else:
        assert exact.check_emptiness_certificate(exact.matrix(A), b, sol.certificate)
    assert bool(sol) == has_positive_solution(A, b, eps=1e-9)


@settings(max_examples=100, deadline=None)
@given(systems())
def test_kernel_vectors_are_annihilated(sys_):
    A, _ = sys_
    n = len(A[0])
    ker = exact.kernel(A, n)
    assert len(ker) == n - exact.rank(A)
    for v in ker:
        assert exact.matvec(exact.matrix(A), v) == [0] * len(A)
