import numpy as np
import pytest
from hypothesis import given, strategies as st

from avmac import lp


@given(st.integers(0, 10_000))
def test_simplex_matches_highs_on_random_bounded_lps(seed):
    rng = np.random.default_rng(seed)
    m, n = 3, 6
    x0 = rng.random(n)
    A_eq = rng.normal(size=(m, n))
    A_eq = np.vstack([A_eq, A_eq[0] + A_eq[1]])  # one redundant row
    b_eq = A_eq @ x0
    A_ub = np.ones((1, n))
    b_ub = np.array([x0.sum() + 1.0])
    c = rng.normal(size=n)
    a = lp.linprog(c, A_eq, b_eq, A_ub, b_ub, method="simplex")
    b = lp.linprog(c, A_eq, b_eq, A_ub, b_ub, method="highs")
    assert a.status == b.status == "optimal"
    assert a.fun == pytest.approx(b.fun, abs=1e-7)
    assert np.abs(A_eq @ a.x - b_eq).max() < 1e-7
    assert a.x.min() >= 0


def test_infeasible_and_unbounded():
    r = lp.linprog([1, 1], A_eq=[[1, 1]], b_eq=[-1], method="simplex")
    assert r.status == "infeasible" and r.phase1_residual >= lp.INFEASIBLE_RESIDUAL
    r = lp.linprog([-1, 0], A_eq=[[1, -1]], b_eq=[0], method="simplex")
    assert r.status == "unbounded"
    r = lp.linprog([1, 1], A_eq=[[1, 1]], b_eq=[-1], method="highs")
    assert r.status == "infeasible"


def test_auto_routes_large_problems_to_highs():
    rng = np.random.default_rng(0)
    n = 400
    A = rng.random((60, n))
    x0 = rng.random(n)
    r = lp.linprog(np.ones(n), A, A @ x0, method="auto")
    assert r.method == "highs" and r.success


def test_independent_rows():
    A = np.array([[1.0, 0, 0], [0, 1, 0], [1, 1, 0]])
    assert len(lp.independent_rows(A)) == 2


def test_unknown_method():
    with pytest.raises(ValueError):
        lp.linprog([1.0], method="nope")
