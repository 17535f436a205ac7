import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linprog

from netgames.errors import CapacityError, ShapeError, ValidationError
from netgames.lp import INFEASIBLE, OPTIMAL, UNBOUNDED, LinearProgram, lp_solve


def _random_lp(seed, m_ge, m_eq, n):
    rng = np.random.default_rng(seed)
    x0 = rng.uniform(0, 2, n)  # guarantees feasibility
    A_ge = rng.normal(size=(m_ge, n))
    A_eq = rng.normal(size=(m_eq, n))
    b_ge = A_ge @ x0 - rng.uniform(0, 1, m_ge)
    b_eq = A_eq @ x0
    c = rng.uniform(0.1, 2.0, n)  # positive costs keep the minimum bounded
    return LinearProgram(c, A_ge, b_ge, A_eq, b_eq)


@given(st.integers(0, 2**31), st.integers(0, 6), st.integers(0, 3), st.integers(1, 6))
def test_matches_scipy_on_feasible_bounded(seed, m_ge, m_eq, n):
    lp = _random_lp(seed, m_ge, m_eq, n)
    ref = linprog(lp.c, A_ub=-lp.A_ge if m_ge else None, b_ub=-lp.b_ge if m_ge else None,
                  A_eq=lp.A_eq if m_eq else None, b_eq=lp.b_eq if m_eq else None, method="highs")
    res = lp_solve(lp)
    assert ref.status == 0
    assert res.status == OPTIMAL
    assert res.value == pytest.approx(ref.fun, abs=1e-7, rel=1e-7)


@given(st.integers(0, 2**31), st.integers(1, 6), st.integers(0, 3), st.integers(1, 6))
def test_duals_certify_optimality(seed, m_ge, m_eq, n):
    lp = _random_lp(seed, m_ge, m_eq, n)
    res = lp_solve(lp)
    y_ge, y_eq = res.duals_ge, res.duals_eq
    assert np.all(y_ge >= -1e-9)
    reduced = lp.c - lp.A_ge.T @ y_ge - lp.A_eq.T @ y_eq
    assert np.all(reduced >= -1e-8)
    assert lp.b_ge @ y_ge + lp.b_eq @ y_eq == pytest.approx(res.value, abs=1e-7)


def test_dual_route_on_tall_problem():
    # many more rows than variables: solved through the dual
    rng = np.random.default_rng(3)
    A = rng.uniform(0, 1, (60, 4))
    b = rng.uniform(0, 1, 60)
    lp = LinearProgram(np.ones(4), A, b)
    res = lp_solve(lp)
    ref = linprog(np.ones(4), A_ub=-A, b_ub=-b, method="highs")
    assert res.meta["route"] == "dual"
    assert res.value == pytest.approx(ref.fun, abs=1e-8)


def test_infeasible_and_unbounded():
    assert lp_solve(LinearProgram([1.0], [[1.0], [-1.0]], [2.0, -1.0])).status == INFEASIBLE
    assert lp_solve(LinearProgram([-1.0], [[1.0]], [0.0])).status == UNBOUNDED
    # tall unbounded problem goes through the dual and its feasibility certificate
    A = np.ones((10, 1))
    assert lp_solve(LinearProgram([-1.0], A, np.zeros(10))).status == UNBOUNDED
    assert lp_solve(LinearProgram([1.0], np.vstack([A, [[-1.0]]]), np.r_[np.full(10, 2.0), -1.0])).status \
        == INFEASIBLE


def test_bounds_and_maximize():
    lp = LinearProgram([1.0, 2.0], A_ge=[[-1.0, -1.0]], b_ge=[-3.0], bounds=[(None, 1.0), (-2.0, 2.0)],
                       maximize=True)
    res = lp_solve(lp)
    np.testing.assert_allclose(res.x, [1.0, 2.0])
    assert res.value == pytest.approx(5.0)


def test_deterministic():
    lp = _random_lp(11, 5, 2, 5)
    a, b = lp_solve(lp), lp_solve(lp)
    assert np.array_equal(a.x, b.x) and a.iterations == b.iterations


def test_degenerate_cycling_example_terminates():
    # Beale's example cycles under the textbook largest-coefficient rule
    c = [-0.75, 150.0, -0.02, 6.0]
    A = [[-0.25, 60.0, 0.04, -9.0], [-0.5, 90.0, 0.02, -3.0], [0.0, 0.0, -1.0, 0.0]]
    res = lp_solve(LinearProgram(c, A, [0.0, 0.0, -1.0]))
    assert res.status == OPTIMAL
    assert res.value == pytest.approx(-0.05)


def test_input_validation():
    with pytest.raises(ShapeError):
        LinearProgram([1.0, 1.0], [[1.0]], [1.0])
    with pytest.raises(ValidationError):
        LinearProgram([np.nan])
    with pytest.raises(ValidationError):
        LinearProgram([1.0], bounds=[(2.0, 1.0)])
    with pytest.raises(CapacityError):
        lp_solve(LinearProgram(np.zeros(5001)))
