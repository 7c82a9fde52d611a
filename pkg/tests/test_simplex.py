import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from gen import random_model
from ldp_fisher import simplex
from ldp_fisher.finite_fisher import utility_vector
from ldp_fisher.staircase import StaircaseMatrix


def _reference(c, A, b):
    res = linprog(-np.asarray(c), A_eq=A, b_eq=b, bounds=(0, None), method="highs")
    assert res.status == 0
    return -res.fun


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_random_bounded_lps_match_highs(seed):
    rng = np.random.default_rng(seed)
    m, n = int(rng.integers(1, 5)), int(rng.integers(2, 10))
    A = rng.normal(size=(m, n))
    A = np.vstack([A, np.ones(n)])  # sum x = const keeps the region bounded
    x0 = rng.exponential(size=n)
    b = A @ x0
    c = rng.normal(size=n)
    res = simplex.solve(c, A, b)
    assert res.objective == pytest.approx(_reference(c, A, b), rel=1e-8, abs=1e-8)
    np.testing.assert_allclose(A @ res.x, b, atol=1e-8)
    assert np.all(res.x >= 0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([0.05, 0.5, 2.0]))
def test_staircase_lp_matches_highs(seed, alpha):
    rng = np.random.default_rng(seed)
    m = random_model(rng, int(rng.integers(2, 7)), nonzero=bool(rng.integers(2)))
    i, _, _ = utility_vector(m, alpha).arrays()
    R = StaircaseMatrix(m.d, alpha).dense()
    res = simplex.solve(i, R, np.ones(m.d))
    assert res.objective == pytest.approx(_reference(i, R, np.ones(m.d)), rel=1e-9, abs=1e-12)


def test_beale_cycling_example_terminates():
    # textbook instance on which Dantzig's rule cycles forever
    c = -np.array([0, 0, 0, -0.75, 20, -0.5, 6])
    A = np.array([
        [1, 0, 0, 0.25, -8, -1, 9],
        [0, 1, 0, 0.5, -12, -0.5, 3],
        [0, 0, 1, 0, 0, 1, 0],
    ])
    b = np.array([0, 0, 1.0])
    res = simplex.solve(c, A, b)
    assert res.objective == pytest.approx(_reference(c, A, b), abs=1e-12)
    assert res.objective == pytest.approx(1.25, abs=1e-12)


def test_negative_rhs_and_redundant_rows():
    A = np.array([[1.0, 1.0, 0.0], [-1.0, -1.0, 0.0], [0.0, 1.0, 1.0]])
    b = np.array([2.0, -2.0, 3.0])
    c = np.array([1.0, 2.0, 0.5])
    res = simplex.solve(c, A, b)
    assert res.objective == pytest.approx(_reference(c, A, b))


def test_infeasible():
    with pytest.raises(simplex.Infeasible):
        simplex.solve([1.0, 1.0], [[1.0, 1.0]], [-1.0])


def test_unbounded():
    with pytest.raises(simplex.Unbounded):
        simplex.solve([1.0, 0.0], [[1.0, -1.0]], [0.0])


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        simplex.solve([1.0], [[1.0, 1.0]], [1.0])
