import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hetmatch.assignment import Permutation, brute_force_lap, solve_lap_max


def test_permutation_rejects_non_bijection():
    with pytest.raises(ValueError):
        Permutation([0, 0, 1])
    with pytest.raises(ValueError):
        Permutation([0, 3])


def test_matrix_convention():
    p = Permutation([2, 0, 1])
    m = p.matrix()
    assert m[0, 2] == 1 and m[1, 0] == 1 and m[2, 1] == 1
    b = np.arange(9.0).reshape(3, 3)
    pbpt = m @ b @ m.T
    tau = p.array
    assert np.array_equal(pbpt, b[np.ix_(tau, tau)])
    assert Permutation.from_matrix(m) == p


def test_bookkeeping():
    p = Permutation([1, 0, 3, 4, 2, 5])
    assert p.fixed_point_count == 1
    assert p.moved_count == 5
    assert p.transposition_count == 1
    assert p.compose(p.inverse()).is_identity()
    assert p.power(6).is_identity()
    assert not p.power(3).is_identity()


def test_compose_order():
    p = Permutation([1, 2, 0])
    q = Permutation([0, 2, 1])
    r = p.compose(q)
    assert all(r[i] == p[q[i]] for i in range(3))


def test_identity_score_gives_identity():
    perm, val = solve_lap_max(np.eye(5))
    assert perm.is_identity()
    assert val == 5.0


def test_lexicographic_tie_break():
    # Every permutation scores the same: the smallest image is the identity.
    perm, _ = solve_lap_max(np.ones((4, 4)))
    assert perm.is_identity()
    s = np.array([[0, 1, 1], [1, 0, 1], [1, 1, 0]], dtype=float)
    perm, val = solve_lap_max(s)
    # Optima are the two 3-cycles; (1, 2, 0) is the smaller image.
    assert val == 3.0
    assert perm.image == (1, 2, 0)


def test_non_finite_rejected():
    s = np.eye(3)
    s[0, 1] = np.nan
    with pytest.raises(FloatingPointError):
        solve_lap_max(s)


def test_brute_force_agrees_on_fixed_matrix():
    s = np.array([[4.0, 1, 3], [2, 0, 5], [3, 2, 2]])
    # Hand check: best is 0->0 (4), 1->2 (5), 2->1 (2) = 11.
    perm, val = brute_force_lap(s)
    assert val == 11.0
    assert perm.image == (0, 2, 1)
    assert solve_lap_max(s)[0] == perm


@settings(max_examples=80, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)).map(lambda t: (t[0], t[0])),
              elements=st.integers(-5, 5).map(float)))
def test_solver_matches_enumeration(s):
    perm, val = solve_lap_max(s)
    bperm, bval = brute_force_lap(s)
    assert val == pytest.approx(bval, abs=1e-9)
    assert float(s[np.arange(len(perm)), perm.array].sum()) == pytest.approx(val)
    # Lexicographic rule picks the same optimum as enumeration order.
    assert perm == bperm


def test_brute_force_size_limit():
    with pytest.raises(ValueError):
        brute_force_lap(np.zeros((10, 10)))


def test_large_instance_returns_a_permutation():
    rng = np.random.default_rng(3)
    s = rng.random((60, 60))
    perm, val = solve_lap_max(s)
    assert sorted(perm.image) == list(range(60))
    assert val == pytest.approx(s[np.arange(60), perm.array].sum())


def test_all_images_distinct_for_enumeration():
    perms = [Permutation(p) for p in itertools.permutations(range(4))]
    assert len(set(perms)) == 24


def test_all_tied_three_by_three():
    # Every permutation of this matrix sums to 15; the smallest image wins.
    s = np.arange(1.0, 10.0).reshape(3, 3)
    values = {float(s[np.arange(3), p].sum()) for p in itertools.permutations(range(3))}
    assert values == {15.0}
    perm, val = solve_lap_max(s)
    assert val == 15.0 and perm.is_identity()
    assert brute_force_lap(s) == (perm, val)


def test_forced_swap_and_singleton():
    perm, val = solve_lap_max(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert perm.image == (1, 0) and val == 2.0
    assert brute_force_lap(np.array([[5.0]])) == (Permutation([0]), 5.0)


@pytest.mark.parametrize("seed", range(100))
def test_matches_enumeration_six(seed):
    s = np.random.default_rng(seed).integers(-10, 10, (6, 6)).astype(float)
    assert solve_lap_max(s) == brute_force_lap(s)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(0, 5), st.floats(-50, 50))
def test_row_shift_invariance(seed, row, shift):
    s = np.random.default_rng(seed).integers(-5, 5, (6, 6)).astype(float)
    perm, val = solve_lap_max(s)
    shifted = s.copy()
    shifted[row] += shift
    perm2, val2 = solve_lap_max(shifted)
    assert perm2 == perm
    assert val2 == pytest.approx(val + shift)
