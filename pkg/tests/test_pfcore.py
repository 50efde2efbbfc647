import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from lamcert import pfcore
from lamcert.errors import (
    DimensionMismatch,
    IndexOutOfRange,
    NotIrreducible,
    PreconditionFailed,
    SubmatrixNotIrreducible,
)
from lamcert.pfcore import (
    IncidenceMatrix,
    check_subinvariance,
    dominated_power_check,
    extract,
    first_reach,
    is_irreducible,
    iter_perron,
    perron_bounds,
    power_subinvariance,
    propagation_check,
    row_copy,
    scc_decompose,
    submatrix,
    submatrix_strict_drop,
)

import oracles

FIB = [[1, 1], [1, 0]]
SWAP = [[0, 1], [1, 0]]
CYCLE3 = [[0, 1, 0], [0, 0, 1], [1, 0, 0]]
WORKED_MHAT = [[1, 0, 0], [1, 1, 0], [1, 0, 0]]


@st.composite
def nonneg_matrices(draw, max_n=6, max_entry=3):
    n = draw(st.integers(1, max_n))
    return [draw(st.lists(st.integers(0, max_entry), min_size=n, max_size=n)) for _ in range(n)]


@st.composite
def irreducible_matrices(draw, max_n=6, max_entry=3):
    m = draw(nonneg_matrices(max_n, max_entry))
    n = len(m)
    # a Hamiltonian cycle makes any matrix irreducible
    perm = draw(st.permutations(range(n)))
    for a, b in zip(perm, perm[1:] + perm[:1]):
        m[a][b] = max(m[a][b], 1)
    return m


# -- types -------------------------------------------------------------------


def test_matrix_rejects_bad_shapes():
    with pytest.raises(DimensionMismatch):
        IncidenceMatrix([[1, 2]])
    with pytest.raises(DimensionMismatch):
        IncidenceMatrix([])
    with pytest.raises(ValueError):
        IncidenceMatrix([[-1]])
    with pytest.raises(TypeError):
        IncidenceMatrix([[1.0]])


def test_matrix_power_uses_big_integers():
    m = IncidenceMatrix([[3]])
    assert m.power(200)[0, 0] == 3**200


def test_rational_refuses_floats():
    with pytest.raises(TypeError):
        pfcore.rational(0.5)
    assert pfcore.rational("3/4") == F(3, 4)


# -- irreducibility ----------------------------------------------------------


@pytest.mark.parametrize(
    "m, expected",
    [(SWAP, True), ([[1, 1], [0, 1]], False), (FIB, True), ([[0]], False), ([[2]], True)],
)
def test_is_irreducible_examples(m, expected):
    assert is_irreducible(m) is expected


@given(nonneg_matrices())
def test_is_irreducible_matches_bruteforce(m):
    assert is_irreducible(m) == oracles.irreducible_bruteforce(m)


# -- Perron bounds -----------------------------------------------------------


def test_perron_1x1():
    cert = perron_bounds([[2]])
    assert (cert.lower, cert.upper) == (2, 2)


def test_perron_permutation():
    cert = perron_bounds(SWAP)
    assert cert.contains(1)
    assert cert.width < F(1, 10**9)


def test_perron_golden_ratio_against_bisection():
    lo, hi = oracles.largest_root_bracket(FIB)
    # frozen from the bisection oracle
    assert float(lo) == pytest.approx(1.6180339887, abs=1e-10)
    cert = perron_bounds(FIB)
    assert cert.lower <= hi and lo <= cert.upper
    assert oracles.largest_root_in(FIB, cert.lower, cert.upper)
    assert cert.width < F(1, 10**9)


def test_perron_rejects_reducible():
    with pytest.raises(NotIrreducible):
        perron_bounds([[1, 1], [0, 1]])


def test_width_not_reached_is_reported_not_raised():
    cert = perron_bounds(FIB, max_iterations=2)
    assert not cert.converged
    assert cert.iterations == 2
    assert cert.verify(FIB)


def test_start_vector_with_zeros_becomes_positive():
    cert = perron_bounds(CYCLE3, start=[1, 0, 0])
    assert all(x > 0 for x in cert.witness)
    assert cert.contains(1)


@settings(max_examples=80, deadline=None)
@given(irreducible_matrices())
def test_collatz_wielandt_sandwich(m):
    cert = perron_bounds(m, target_width=F(1, 10**6))
    assert cert.verify(m)
    assert oracles.largest_root_in(m, cert.lower, cert.upper)


@settings(max_examples=60, deadline=None)
@given(irreducible_matrices(), st.lists(st.integers(1, 9), min_size=6, max_size=6))
def test_any_positive_vector_brackets(m, w):
    w = [F(x) for x in w[: len(m)]]
    mw = oracles.matvec(m, w)
    ratios = [a / b for a, b in zip(mw, w)]
    assert oracles.largest_root_in(m, min(ratios), max(ratios))


@settings(max_examples=60, deadline=None)
@given(irreducible_matrices())
def test_bounds_are_monotone(m):
    prev = None
    for k, cert in zip(range(40), iter_perron(m)):
        if prev is not None:
            assert cert.lower >= prev.lower
            assert cert.upper <= prev.upper
        prev = cert


# -- subinvariance -----------------------------------------------------------


def test_check_subinvariance_examples():
    r = check_subinvariance(FIB, [2, 1], 2)
    assert r.holds and r.strict_indices == (0,) and r.violated_indices == ()
    r = check_subinvariance([[1, 0], [0, 1]], [1, 1], 1)
    assert r.holds and r.strict_indices == ()
    r = check_subinvariance([[0, 2], [2, 0]], [1, 1], 1)
    assert not r.holds and r.violated_indices == (0, 1)


def test_check_subinvariance_dimension():
    with pytest.raises(DimensionMismatch):
        check_subinvariance(FIB, [1, 1, 1], 2)


def test_power_subinvariance_examples():
    # M^3 v = (8, 5) <= (16, 8)
    assert oracles.matvec(oracles.matpow(FIB, 3), [2, 1]) == [8, 5]
    r = power_subinvariance(FIB, [2, 1], 2, 3)
    assert r.holds and r.strict_indices == (0, 1)
    r = power_subinvariance([[1, 0], [0, 1]], [1, 1], 1, 5)
    assert r.holds and r.strict_indices == ()
    r = power_subinvariance(SWAP, [1, 1], 1, 2)
    assert r.holds and r.strict_indices == ()


def test_power_subinvariance_precondition():
    with pytest.raises(PreconditionFailed):
        power_subinvariance([[0, 2], [2, 0]], [1, 1], 1, 2)


def test_dominated_power_examples():
    # M^2 v = (5, 3) < (8, 4)
    r = dominated_power_check(FIB, FIB, [2, 1], 2, 2)
    assert r.holds and r.strict_indices == (0, 1)
    r = dominated_power_check([[0, 0], [0, 0]], FIB, [2, 1], 2, 1)
    assert r.holds and r.strict_indices == (0,)
    ones = [[1, 1], [1, 1]]
    r = dominated_power_check([[1, 0], [1, 1]], ones, [1, 1], 2, 1)
    assert r.strict_indices == ()
    assert r.dominated_strict == (0,)


def test_dominated_power_precondition():
    with pytest.raises(PreconditionFailed):
        dominated_power_check([[2, 2], [2, 2]], FIB, [2, 1], 2, 1)


def _subinvariant_instance(rng, n):
    m = [[rng.randint(0, 3) for _ in range(n)] for _ in range(n)]
    v = [F(rng.randint(1, 6)) for _ in range(n)]
    mv = oracles.matvec(m, v)
    lam = max(a / b for a, b in zip(mv, v)) + rng.choice([0, 0, F(1, 3)])
    return m, v, max(lam, F(1, 2))


@pytest.mark.parametrize("seed", range(30))
def test_power_lemma_random(seed):
    rng = random.Random(seed)
    m, v, lam = _subinvariant_instance(rng, rng.randint(1, 5))
    nmat = [[rng.randint(0, x) for x in row] for row in m]
    for p in range(1, 9):
        power_subinvariance(m, v, lam, p)
        dominated_power_check(nmat, m, v, lam, p)


# -- submatrices ---------------------------------------------------------------


def test_submatrix_examples():
    m = [[1, 2, 3], [4, 5, 6], [7, 8, 9]]
    assert submatrix(m, [0, 1, 2]) == IncidenceMatrix(m)
    assert submatrix([[1, 2], [3, 4]], [1]) == IncidenceMatrix([[4]])
    m = [[1, 1, 0], [1, 1, 0], [5, 0, 2]]
    assert submatrix(m, [0, 1]) == IncidenceMatrix([[1, 1], [1, 1]])
    assert extract([1, 1, 7], [0, 1]) == (1, 1)


@pytest.mark.parametrize("bad", [[], [2], [1, 0], [0, 0], [-1]])
def test_submatrix_bad_subsets(bad):
    with pytest.raises(IndexOutOfRange):
        submatrix([[1, 2], [3, 4]], bad)


def test_submatrix_strict_drop_examples():
    assert submatrix_strict_drop(FIB, [0, 1], [2, 1], 2, 5) == (1, 0)
    assert submatrix_strict_drop(CYCLE3, [0, 1, 2], [1, 1, 1], 1, 20) is None
    # (Mhat^2 v)_2 = 3 < 4 on the worked instance
    v = [1, 1, F(3, 4)]
    assert oracles.matvec(oracles.matpow(WORKED_MHAT, 2), v)[1] == 3
    assert submatrix_strict_drop(WORKED_MHAT, [1], v, 2, 12) == (2, 1)


def test_submatrix_strict_drop_errors():
    with pytest.raises(SubmatrixNotIrreducible):
        submatrix_strict_drop(WORKED_MHAT, [0, 1], [1, 1, F(3, 4)], 2, 5)
    with pytest.raises(PreconditionFailed):
        submatrix_strict_drop(FIB, [0, 1], [1, 1], 1, 5)


@settings(max_examples=40, deadline=None)
@given(irreducible_matrices(max_n=5))
def test_submatrix_monotonicity_bruteforce(m):
    top = oracles.perron_root_float(m)
    for idx in oracles.all_subsets(len(m)):
        sub = [[m[a][b] for b in idx] for a in idx]
        if oracles.irreducible_bruteforce(sub):
            assert oracles.perron_root_float(sub) <= top + 1e-9
            assert submatrix(m, idx).tolist() == sub


# -- first reach, row copy, propagation --------------------------------------


def test_first_reach_examples():
    assert [first_reach(FIB, j) for j in range(2)] == [1, 1]
    assert [first_reach(SWAP, j) for j in range(2)] == [2, 1]
    assert [first_reach(CYCLE3, j) for j in range(3)] == [3, 2, 1]


def test_first_reach_cap():
    with pytest.raises(NotIrreducible):
        first_reach([[1, 1], [0, 1]], 1)


def test_row_copy_examples():
    m = [[1, 2], [3, 4]]
    assert row_copy(m, 1, 1) == IncidenceMatrix(m)
    once = row_copy(m, 1, 0)
    assert once == IncidenceMatrix([[3, 4], [3, 4]])
    assert row_copy(once, 1, 0) == once
    with pytest.raises(IndexOutOfRange):
        row_copy(m, 2, 0)


@given(nonneg_matrices(), st.data())
def test_row_copy_leaves_other_rows(m, data):
    n = len(m)
    s = data.draw(st.integers(0, n - 1))
    d = data.draw(st.integers(0, n - 1))
    out = row_copy(m, s, d)
    for i in range(n):
        assert out.rows[i] == (tuple(m[s]) if i == d else tuple(m[i]))


def test_propagation_examples():
    assert propagation_check(FIB, FIB)
    mbar = [[1, 1, 1], [0, 0, 1], [1, 0, 0]]
    # row 2 of Mbar^2 = (1, 0, 0) = row 2 of M^2
    assert oracles.matpow(mbar, 2)[1] == oracles.matpow(CYCLE3, 2)[1] == [1, 0, 0]
    assert propagation_check(CYCLE3, mbar)
    assert propagation_check(SWAP, [[5, 7], [1, 0]])


def test_propagation_precondition():
    with pytest.raises(PreconditionFailed):
        propagation_check(FIB, [[1, 1], [0, 0]])
    with pytest.raises(NotIrreducible):
        propagation_check([[1, 1], [0, 1]], [[1, 1], [0, 1]])


@settings(max_examples=100, deadline=None)
@given(irreducible_matrices(max_n=8), st.data())
def test_propagation_randomized(m, data):
    n = len(m)
    first = data.draw(st.lists(st.integers(0, 5), min_size=n, max_size=n))
    assert propagation_check(m, [first] + m[1:])


# -- SCCs --------------------------------------------------------------------


def test_scc_examples():
    assert scc_decompose(FIB) == [(0, 1)]
    assert scc_decompose([[1, 1], [0, 1]]) == [(0,), (1,)]
    assert scc_decompose(WORKED_MHAT) == [(0,), (1,), (2,)]


@given(nonneg_matrices())
def test_scc_components_irreducible_or_trivial(m):
    comps = scc_decompose(m)
    assert sorted(i for c in comps for i in c) == list(range(len(m)))
    for c in comps:
        sub = submatrix(m, c)
        assert is_irreducible(sub) or sub.rows == ((0,),)
