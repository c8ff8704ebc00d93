import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from hetmatch.corr_er import homogeneous_spec, sample_pair, sbm_spec
from hetmatch.usvt import (UsvtOptions, center, clip_stage, elbow_rank, profile_loglik,
                           scaled_threshold, usvt_estimate)

Q1 = [[0.8, 0.1], [0.1, 0.2]]
Q2 = [[0.2, 0.1], [0.1, 0.8]]
R = [[0.25, 0.3], [0.3, 0.25]]


def oracle_elbow(values):
    """Brute-force profile likelihood: explicit Gaussian log-density sums."""
    x = np.asarray(values, dtype=float)
    best, best_q = -np.inf, None
    for q in range(1, len(x)):
        m1, m2 = x[:q].mean(), x[q:].mean()
        var = (np.sum((x[:q] - m1) ** 2) + np.sum((x[q:] - m2) ** 2)) / len(x)
        if var == 0:
            ll = np.inf
        else:
            sd = math.sqrt(var)
            ll = norm.logpdf(x[:q], m1, sd).sum() + norm.logpdf(x[q:], m2, sd).sum()
        if ll > best + 1e-9:
            best, best_q = ll, q
    return best_q


def test_options_validation():
    with pytest.raises(ValueError):
        UsvtOptions.explicit(0.0)
    with pytest.raises(ValueError):
        UsvtOptions.scaled(2.0, 1.5)
    with pytest.raises(ValueError):
        UsvtOptions.scaled(0.0, 0.5)
    with pytest.raises(ValueError):
        UsvtOptions.elbow(0)
    with pytest.raises(ValueError):
        UsvtOptions(rule="median")


def test_zero_matrix():
    est = usvt_estimate(np.zeros((5, 5)), UsvtOptions.explicit(1.0))
    assert est.retained_rank == 0
    assert not est.q_hat.any()


def test_hollow_all_ones():
    a = np.ones((4, 4)) - np.eye(4)
    est = usvt_estimate(a, UsvtOptions.explicit(2.0))
    assert np.allclose(est.singular_values, [3, 1, 1, 1])
    assert est.retained_rank == 1
    off = est.q_hat[~np.eye(4, dtype=bool)]
    assert np.allclose(off, 0.75)
    assert np.all(np.diag(est.q_hat) == 0)


def test_single_edge_below_threshold():
    a = np.zeros((4, 4))
    a[1, 2] = a[2, 1] = 1
    est = usvt_estimate(a, UsvtOptions.explicit(1.5))
    assert np.allclose(est.singular_values, [1, 1, 0, 0])
    assert est.retained_rank == 0
    assert not est.q_hat.any()


def test_threshold_is_strict():
    a = np.array([[0.0, 2.0], [2.0, 0.0]])
    est = usvt_estimate(a, UsvtOptions.explicit(2.0))
    assert np.array_equal(est.singular_values, [2.0, 2.0])
    assert est.retained_rank == 0


def test_scaled_threshold_values():
    assert scaled_threshold(300, 0.16, 2.01) == pytest.approx(2.01 * math.sqrt(48))
    assert scaled_threshold(300, 0.16, 2.01) == pytest.approx(13.926, abs=1e-3)
    assert scaled_threshold(49, 1, 1) == pytest.approx(7.0)
    assert scaled_threshold(431, 1, 2) == pytest.approx(41.52, abs=5e-3)
    with pytest.raises(ValueError):
        scaled_threshold(10, 0.0, 1.0)


@pytest.mark.parametrize("values,expected", [
    ([10, 9.5, 1, 0.9, 0.8], 2),
    ([5, 1, 1, 1, 1], 1),
    ([3.0], 1),
])
def test_elbow_examples(values, expected):
    assert elbow_rank(values) == expected
    if len(values) > 1:
        assert oracle_elbow(values) == expected


@settings(max_examples=150, deadline=None)
@given(st.lists(st.floats(0, 100, allow_nan=False), min_size=2, max_size=12))
def test_elbow_matches_profile_likelihood_oracle(vals):
    x = sorted(vals, reverse=True)
    if len(set(np.round(x, 6))) < 3:
        return  # degenerate scree lists have many exact ties
    ll = profile_loglik(x)
    ours = elbow_rank(x)
    # Our pick attains the brute-force maximum likelihood.
    ref = oracle_elbow(x)
    assert ll[ours - 1] == pytest.approx(ll[ref - 1], rel=1e-9, abs=1e-9)


def test_successive_elbows():
    x = [20, 19, 10, 9.5, 9, 1, 0.9, 0.8, 0.7]
    first = elbow_rank(x, 1)
    second = elbow_rank(x, 2)
    assert first < second <= len(x)
    assert second == first + oracle_elbow(x[first:])


def test_elbow_rejects_unsorted():
    with pytest.raises(ValueError):
        elbow_rank([1, 2, 3])


def test_reconstruction_identity():
    rng = np.random.default_rng(0)
    m = rng.normal(size=(8, 8))
    m = m + m.T
    s = np.linalg.svd(m, compute_uv=False)
    opts = UsvtOptions.explicit(0.5 * s[s > 1e-10].min(), clip_to_unit=False, hollow_output=False)
    est = usvt_estimate(m, opts)
    assert np.linalg.norm(est.q_hat - m) < 1e-8


def test_rank_monotone_in_threshold():
    a = sample_pair(homogeneous_spec(40, 0.3, 0.3, 0.5), 1).a
    ranks = [usvt_estimate(a, UsvtOptions.explicit(t)).retained_rank for t in np.linspace(0.1, 15, 40)]
    assert all(r1 >= r2 for r1, r2 in zip(ranks, ranks[1:]))


def test_output_invariants():
    a = sample_pair(homogeneous_spec(30, 0.4, 0.4, 0.5), 3).a
    est = usvt_estimate(a, UsvtOptions.explicit(2.0))
    assert np.array_equal(est.q_hat, est.q_hat.T)
    assert est.q_hat.min() >= 0 and est.q_hat.max() <= 1
    assert np.all(np.diag(est.q_hat) == 0)
    assert est.retained_rank == int(np.sum(est.singular_values > 2.0))
    est = usvt_estimate(a, UsvtOptions.explicit(2.0, hollow_output=False))
    assert np.any(np.diag(est.q_hat) != 0)


def test_clip_idempotent():
    rng = np.random.default_rng(5)
    m = rng.normal(0.5, 1, (6, 6))
    assert np.array_equal(clip_stage(clip_stage(m)), clip_stage(m))


def test_non_finite_input():
    a = np.zeros((3, 3))
    a[0, 1] = a[1, 0] = np.inf
    with pytest.raises(FloatingPointError):
        usvt_estimate(a, UsvtOptions.explicit(1.0))


def test_center():
    a = sample_pair(homogeneous_spec(6, 0.5, 0.5, 0.2), 0).a
    assert np.array_equal(center(a, np.zeros_like(a)), a)
    assert not center(a, a).any()
    with pytest.raises(ValueError):
        center(a, np.zeros((5, 5)))


def _relative_errors(m, seeds):
    spec = sbm_spec([m, m], Q1, Q2, R)
    ea = spec.mean_a()
    t_opts = UsvtOptions.scaled(2.01, 0.16)
    errs, sq = [], []
    for s in seeds:
        est = usvt_estimate(sample_pair(spec, s).a, t_opts)
        errs.append(np.linalg.norm(est.q_hat - ea) / np.linalg.norm(ea))
        sq.append(np.linalg.norm(est.q_hat - ea) ** 2)
    return np.array(errs), np.array(sq), scaled_threshold(2 * m, 0.16, 2.01)


def test_error_bound_low_rank_blocks():
    errs, sq, t = _relative_errors(150, range(20))
    # Block rank 2.
    assert np.all(sq < 16 * t * t * 2)


def test_error_decreases_with_n():
    small, _, _ = _relative_errors(50, range(20))
    large, _, _ = _relative_errors(150, range(20))
    assert large.mean() < small.mean()
