"""Exit criteria, each run at its stated tolerance.

Every test records a PASS/FAIL line (see ``conftest.py``) before asserting,
so the terminal summary lists all criteria even when some fail.
"""

import itertools
import math

import numpy as np
import pytest
from scipy.stats import spearmanr

from hetmatch.assignment import Permutation
from hetmatch.corr_er import (FeasibilityError, block_swap, expected_trace, homogeneous_spec,
                              sample_pair, sbm_spec)
from hetmatch.faq import MatchOptions, faq_match, gm_objective
from hetmatch.harness import resolve_config, run_experiment, summarize
from hetmatch.harness.experiments import HETERO_Q1, HETERO_Q2, HETERO_R, core_junk_spec, hetero_spec
from hetmatch.matchability import (brute_force_gmp, count_pi_n_k, frobenius_concentration_check,
                                   moved_pair_count, moved_pair_formula, tau_id)
from hetmatch.usvt import UsvtOptions, usvt_estimate

pytestmark = pytest.mark.acceptance

REPLICATES = 20
_DETERMINISM: dict[str, bool] = {}


def means(rows, metric="accuracy"):
    """``{(params..., centering): mean}`` keyed on the grid values."""
    return {(tuple(v for v in s.params.values() if v is not None), s.centering): s.mean
            for s in summarize(rows, metric)}


def run(**kw):
    return run_experiment(resolve_config(dict(replicates=REPLICATES, seed=0, **kw)))


# 1 --------------------------------------------------------------------------

def _example1_gap(m):
    p, q, r = 0.8, 0.2, 0.1
    spec = sbm_spec([m, m], [[p, r], [r, q]], [[q, r], [r, p]], [[0.25, 0.3], [0.3, 0.25]])
    return expected_trace(spec, block_swap(m)) - expected_trace(spec, Permutation.identity(2 * m))


def test_block_swap_gap_constant(criterion):
    g = {m: _example1_gap(m) for m in (10, 20, 30, 50)}
    coef = (g[30] - 2 * g[20] + g[10]) / 200
    n = 50
    ok = abs(coef - 0.113) < 1e-9 and g[n] >= 0.113 * n * n - 5 * n
    assert criterion(1, ok, f"coef={coef:.12f} gap(50)={g[n]:.4f} floor={0.113 * n * n - 5 * n:.1f}")


# 2 --------------------------------------------------------------------------

def test_sampler_fidelity(criterion):
    pair = sample_pair(homogeneous_spec(200, 0.5, 0.5, 0.6), 2024)
    iu = np.triu_indices(200, 1)
    x, y = pair.a[iu], pair.b[iu]
    corr = float(np.corrcoef(x, y)[0, 1])
    ok = abs(corr - 0.6) <= 0.02 and abs(x.mean() - 0.5) <= 0.015 and abs(y.mean() - 0.5) <= 0.015
    assert criterion(2, ok, f"corr={corr:.4f} density_a={x.mean():.4f} density_b={y.mean():.4f}")


# 3 --------------------------------------------------------------------------

def _usvt_error(m):
    spec = sbm_spec([m, m], HETERO_Q1, HETERO_Q2, HETERO_R)
    ea = spec.mean_a()
    opts = UsvtOptions.scaled(2.01, 0.16)
    errs = [np.linalg.norm(usvt_estimate(sample_pair(spec, s).a, opts).q_hat - ea) / np.linalg.norm(ea)
            for s in range(20)]
    return float(np.mean(errs))


def test_usvt_accuracy(criterion):
    assert 2.01 * math.sqrt(0.16 * 300) == pytest.approx(2.01 * math.sqrt(48))
    big, small = _usvt_error(150), _usvt_error(50)
    ok = big <= 0.2 and big < small
    assert criterion(3, ok, f"rel_err n=300: {big:.4f}  n=100: {small:.4f}")


# 4 --------------------------------------------------------------------------

def test_faq_reaches_exhaustive_optimum(criterion):
    spec = homogeneous_spec(6, 0.5, 0.5, 0.8)
    hits, below = 0, 0
    for s in range(50):
        pair = sample_pair(spec, s)
        best = gm_objective(pair.a, pair.b, brute_force_gmp(pair.a, pair.b)[0])[0]
        res = faq_match(pair.a, pair.b, MatchOptions(restarts=20, seed=s))
        hits += abs(res.objective - best) <= 1e-9
        below += res.objective < best - 1e-9
    ok = hits >= 40 and below == 0
    assert criterion(4, ok, f"optimum reached {hits}/50, below optimum {below}")


# 5 --------------------------------------------------------------------------

def test_alpha_sweep_contrast(criterion):
    m = means(run(experiment="figure1_alpha_sweep", n=[150], alpha=[0.75, 1.0]))
    top = {c: m[((150, 1.0), c)] for c in ("none", "oracle", "usvt")}
    low = {c: m[((150, 0.75), c)] for c in ("oracle", "usvt")}
    ok = (top["none"] < 0.05 and top["oracle"] > 0.8 and top["usvt"] > 0.8
          and all(top[c] > low[c] for c in low))
    detail = ("alpha=1 " + " ".join(f"{c}={v:.3f}" for c, v in top.items())
              + " | alpha=0.75 " + " ".join(f"{c}={v:.3f}" for c, v in low.items()))
    assert criterion(5, ok, detail)


# 6 --------------------------------------------------------------------------

def test_n_sweep_trend(criterion):
    sizes = [25, 50, 100, 150]
    m = means(run(experiment="figure2_n_sweep", n=sizes, alpha=[1.0]))
    oracle = [m[((n, 1.0), "oracle")] for n in sizes]
    rho = float(spearmanr(sizes, oracle).statistic)
    ok = rho == 1.0 and oracle[-1] > 0.8
    detail = "oracle " + " ".join(f"n={n}:{v:.4f}" for n, v in zip(sizes, oracle)) + f" spearman={rho:.2f}"
    assert criterion(6, ok, detail)


# 7 --------------------------------------------------------------------------

def test_centering_cost(criterion):
    ps, rhos = [0.1, 0.3, 0.5], [0.5, 0.7, 0.9]
    rows = run(experiment="center_cost", n=[100], p=ps, rho=rhos, centering=["none", "usvt"])
    diffs = {}
    for (grid, rep), pair in _paired(rows).items():
        diffs.setdefault(grid, []).append(pair["none"] - pair["usvt"])
    worst = 0.0
    for (n, p, rho), d in diffs.items():
        if rho >= 0.7:
            worst = max(worst, abs(float(np.mean(d))))
    assert criterion(7, worst <= 0.1, f"max |mean diff| over rho>=0.7 cells = {worst:.4f}")


def _paired(rows):
    out = {}
    for r in rows:
        out.setdefault((tuple(r.params.values()), r.replicate), {})[r.centering] = r.accuracy
    return out


# 8 --------------------------------------------------------------------------

def test_core_junk_direction(criterion):
    # A covariance of 0.15 exceeds the largest one Bernoulli(0.8) and
    # Bernoulli(0.2) can share (0.04), so the core carries correlation 0.15.
    with pytest.raises(FeasibilityError):
        core_junk_spec(60, 15, core_cov=0.15)
    m = means(run(experiment="core_junk", n_core=60, n_junk=[15, 30, 60], core_rho=0.15),
              "core_accuracy")
    cells = {nj: (m[((60, nj), "none")], m[((60, nj), "usvt")]) for nj in (15, 30, 60)}
    ok = all(u > none for none, u in cells.values())
    detail = ("covariance 0.15 infeasible; core correlation 0.15: "
              + " ".join(f"n_j={nj}: none={a:.3f} usvt={b:.3f}" for nj, (a, b) in cells.items()))
    assert criterion(8, ok, detail)


# 9 --------------------------------------------------------------------------

def test_combinatorial_exactness(criterion):
    worked = tau_id(Permutation([2, 5, 6, 0, 7, 4, 3, 1]), 4).image == (0, 1, 2, 3, 7, 4, 6, 5)
    formula = all(
        moved_pair_count(p) == moved_pair_formula(n, p.moved_count, p.transposition_count)
        == sum(1 for u, v in itertools.combinations(range(n), 2) if {p[u], p[v]} != {u, v})
        for n in range(1, 8) for p in map(Permutation, itertools.permutations(range(n))))
    counts = all(sum(count_pi_n_k(n, k) for k in range(n + 1)) == math.factorial(n) for n in range(11))
    held = frobenius_concentration_check(hetero_spec(150, 1.0), range(100)).n_holds
    ok = worked and formula and counts and held == 100
    assert criterion(9, ok, f"tau_id={worked} moved_pairs={formula} counts={counts} "
                            f"concentration={held}/100")


# 10 -------------------------------------------------------------------------

@pytest.mark.parametrize("cfg", [
    dict(experiment="center_cost", n=[40], p=[0.3], rho=[0.5, 0.9], replicates=4),
    dict(experiment="figure1_alpha_sweep", n=[20], alpha=[0.85, 1.0], replicates=3),
    dict(experiment="core_junk", n_core=16, n_junk=[8], replicates=3, restarts=2),
])
def test_determinism(cfg, tmp_path, criterion):
    outs = []
    for k, threads in enumerate((1, 1, 8)):
        path = tmp_path / f"run{k}.csv"
        run_experiment(resolve_config(dict(cfg, threads=threads, seed=11)), out=path)
        outs.append(path.read_bytes())
    ok = outs[0] == outs[1] == outs[2]
    _DETERMINISM[cfg["experiment"]] = ok
    assert criterion(10, all(_DETERMINISM.values()),
                     "byte-identical CSV (threads 1, 1, 8): "
                     + " ".join(f"{e}={v}" for e, v in _DETERMINISM.items()))
    assert ok

