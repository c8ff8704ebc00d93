"""Exact small-graph matchability and the covariance/counting diagnostics."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .assignment import Permutation
from .corr_er import CorrSpec, sample_pair
from .faq import gm_objective
from .usvt import UsvtOptions, center, usvt_estimate

__all__ = [
    "BRUTE_FORCE_GMP_MAX_N",
    "GMP_TIE_ATOL",
    "PermClass",
    "MatchabilityVerdict",
    "brute_force_gmp",
    "is_matchable",
    "matchability_verdict",
    "x_p",
    "moved_pairs",
    "moved_pair_count",
    "moved_pair_formula",
    "epsilon_bound",
    "growth_ratio",
    "count_pi_n_k",
    "derangements",
    "tau_id",
    "accuracy",
    "frobenius_concentration_check",
    "ConcentrationReport",
]

BRUTE_FORCE_GMP_MAX_N = 8
GMP_TIE_ATOL = 1e-9


@dataclass(frozen=True)
class PermClass:
    """``Pi(n, k)``: permutations of ``n`` labels moving exactly ``k``."""

    n: int
    k: int

    def __post_init__(self):
        if not 0 <= self.k <= self.n:
            raise ValueError(f"need 0 <= k <= n, got n={self.n}, k={self.k}")

    def __contains__(self, p: Permutation) -> bool:
        return len(p) == self.n and p.moved_count == self.k

    def __len__(self) -> int:
        return count_pi_n_k(self.n, self.k)

    @property
    def empty(self) -> bool:
        return self.k == 1


def _perm_array(n: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(n))), dtype=np.intp)


def brute_force_gmp(a, b) -> list[Permutation]:
    """Every permutation minimising ``||a - P b P^T||_F^2`` (ties within 1e-9).

    Returned in lexicographic order of their images.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"a and b must be square with equal shape: {a.shape}, {b.shape}")
    n = a.shape[0]
    if n > BRUTE_FORCE_GMP_MAX_N:
        raise ValueError(f"exhaustive matching limited to n <= {BRUTE_FORCE_GMP_MAX_N}, got {n}")
    perms = _perm_array(n)
    pb = b[perms[:, :, None], perms[:, None, :]]
    obj = np.sum((a[None] - pb) ** 2, axis=(1, 2))
    best = obj.min()
    return [Permutation(perms[i]) for i in np.flatnonzero(obj <= best + GMP_TIE_ATOL)]


def _flavor_holds(argmin: list[Permutation], flavor: str, param: int | None) -> bool:
    if flavor == "exact":
        return len(argmin) == 1 and argmin[0].is_identity()
    if flavor == "f":
        return all(p.moved_count <= param for p in argmin)
    if flavor == "core":
        return all(all(p[i] == i for i in range(param)) for p in argmin)
    raise ValueError(f"unknown matchability flavor {flavor!r}")


def _parse_flavor(flavor) -> tuple[str, int | None]:
    if isinstance(flavor, tuple):
        name, param = flavor
        return name, int(param)
    if flavor == "exact":
        return "exact", None
    raise ValueError(f"flavor must be 'exact', ('f', k) or ('core', n_core); got {flavor!r}")


def is_matchable(a, b, flavor="exact") -> bool:
    """Whether the exact GMP argmin satisfies the flavour.

    ``"exact"``: argmin is ``{identity}``.  ``("f", k)``: every optimum moves
    at most ``k`` labels.  ``("core", n_core)``: every optimum fixes each of
    the first ``n_core`` vertices.
    """
    name, param = _parse_flavor(flavor)
    return _flavor_holds(brute_force_gmp(a, b), name, param)


@dataclass(frozen=True)
class MatchabilityVerdict:
    argmin_sets: dict[str, list[Permutation]]
    verdicts: dict[tuple[str, str], bool]
    f: int
    n_core: int
    objectives: dict[str, float] = field(default_factory=dict)

    @property
    def argmin_set(self) -> list[Permutation]:
        return self.argmin_sets["delta_gmp"]


def matchability_verdict(a, b, *, f: int = 0, n_core: int | None = None,
                         spec: CorrSpec | None = None,
                         usvt: UsvtOptions | tuple[UsvtOptions, UsvtOptions] | None = None
                         ) -> MatchabilityVerdict:
    """Exact verdicts for plain, oracle-centred and USVT-centred matching.

    The oracle arm needs ``spec``; the USVT arm needs ``usvt`` (one options
    object for both graphs, or a pair).  Arms without their input are
    skipped.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = a.shape[0]
    n_core = n if n_core is None else n_core
    inputs = {"delta_gmp": (a, b)}
    if spec is not None:
        inputs["oracle_centered"] = (center(a, spec.mean_a()), center(b, spec.mean_b()))
    if usvt is not None:
        oa, ob = usvt if isinstance(usvt, tuple) else (usvt, usvt)
        inputs["usvt_centered"] = (center(a, usvt_estimate(a, oa).q_hat),
                                   center(b, usvt_estimate(b, ob).q_hat))
    argmins, verdicts, objectives = {}, {}, {}
    for name, (x, y) in inputs.items():
        am = brute_force_gmp(x, y)
        argmins[name] = am
        objectives[name] = gm_objective(x, y, am[0])[0]
        verdicts[(name, "exact")] = _flavor_holds(am, "exact", None)
        verdicts[(name, "f")] = _flavor_holds(am, "f", f)
        verdicts[(name, "core")] = _flavor_holds(am, "core", n_core)
    return MatchabilityVerdict(argmins, verdicts, f, n_core, objectives)


def moved_pairs(p: Permutation) -> np.ndarray:
    """Boolean mask over ``u < v`` pairs (``triu_indices`` order) of pairs displaced by ``p``."""
    tau = p.array
    iu, iv = np.triu_indices(len(p), 1)
    tu, tv = tau[iu], tau[iv]
    fixed = ((tu == iu) & (tv == iv)) | ((tu == iv) & (tv == iu))
    return ~fixed


def moved_pair_formula(n: int, k: int, transpositions: int) -> int:
    return math.comb(k, 2) - transpositions + (n - k) * k


def moved_pair_count(p: Permutation) -> int:
    """Number of unordered pairs ``{u, v}`` with ``{tau u, tau v} != {u, v}``.

    Counted directly and cross-checked against the closed form
    ``C(k, 2) - T + (n - k) k`` and its lower bound ``k (n - 1 - k/2)``.
    """
    count = int(moved_pairs(p).sum())
    n, k = len(p), p.moved_count
    formula = moved_pair_formula(n, k, p.transposition_count)
    if count != formula:
        raise AssertionError(f"moved pair count {count} != closed form {formula} for {p}")
    if count < k * (n - 1 - k / 2):
        raise AssertionError(f"moved pair count {count} below k(n-1-k/2) for {p}")
    return count


def x_p(spec: CorrSpec, p: Permutation) -> float:
    """Expected centred-objective gap: covariance summed over displaced pairs."""
    if len(p) != spec.n:
        raise ValueError(f"permutation size {len(p)} != model size {spec.n}")
    iu, iv = np.triu_indices(spec.n, 1)
    return float(spec.covariance()[iu, iv][moved_pairs(p)].sum())


def _min_offdiag_cov(spec: CorrSpec) -> float:
    if spec.n < 2:
        return 0.0
    iu, iv = np.triu_indices(spec.n, 1)
    return float(spec.covariance()[iu, iv].min())


def epsilon_bound(spec: CorrSpec, k: int) -> float:
    """Lower bound ``(1/2) eps k (n - 1 - k/2)`` on ``x_p`` over ``Pi(n, k)``."""
    n = spec.n
    if not 2 <= k <= n:
        raise ValueError(f"need 2 <= k <= n, got k={k}, n={n}")
    return 0.5 * _min_offdiag_cov(spec) * k * (n - 1 - k / 2)


def growth_ratio(spec: CorrSpec, p: Permutation) -> float:
    """``x_p / (k sqrt(n log n))``; a diagnostic, never a pass/fail test."""
    k = p.moved_count
    n = spec.n
    if k == 0 or n < 2:
        return math.inf
    return x_p(spec, p) / (k * math.sqrt(n * math.log(n)))


def derangements(k: int) -> int:
    if k < 0:
        raise ValueError("k must be >= 0")
    d_prev, d = 1, 0  # D_0, D_1
    if k == 0:
        return 1
    for m in range(2, k + 1):
        d_prev, d = d, (m - 1) * (d + d_prev)
    return d


def count_pi_n_k(n: int, k: int) -> int:
    """``|Pi(n, k)| = C(n, k) D_k``."""
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got n={n}, k={k}")
    return math.comb(n, k) * derangements(k)


def tau_id(tau: Permutation, n_core: int) -> Permutation:
    """Core-fixing reduction of ``tau``.

    Core labels (``< n_core``) are fixed; a junk label follows its ``tau``
    orbit to the first junk label it reaches.
    """
    n = len(tau)
    if not 0 <= n_core <= n:
        raise ValueError(f"n_core must lie in [0, {n}], got {n_core}")
    img = list(range(n))
    for i in range(n_core, n):
        j = tau[i]
        while j < n_core:
            j = tau[j]
        img[i] = j
    return Permutation(img)


def accuracy(p: Permutation, truth: Permutation | None = None, core: int | None = None) -> float:
    """Fraction of vertices (or of the first ``core``) with ``p(i) == truth(i)``."""
    truth = Permutation.identity(len(p)) if truth is None else truth
    if len(truth) != len(p):
        raise ValueError(f"size mismatch: {len(p)} vs {len(truth)}")
    m = len(p) if core is None else int(core)
    if m == 0:
        return 1.0
    hits = np.count_nonzero(p.array[:m] == truth.array[:m])
    return hits / m


@dataclass(frozen=True)
class ConcentrationReport:
    seeds: tuple[int, ...]
    norm_a: tuple[float, ...]
    norm_b: tuple[float, ...]
    bound_a: float
    bound_b: float

    @property
    def holds(self) -> tuple[bool, ...]:
        def ok(x, bound):
            # A degenerate model has zero deviation and a zero bound.
            return x < bound or x == bound == 0.0
        return tuple(ok(x, self.bound_a) and ok(y, self.bound_b)
                     for x, y in zip(self.norm_a, self.norm_b))

    @property
    def n_holds(self) -> int:
        return sum(self.holds)


def frobenius_concentration_check(spec: CorrSpec, seeds) -> ConcentrationReport:
    """Check ``||A - E A||_F < 2 sqrt(r1) n`` (and likewise for ``B``) per seed.

    ``r1``, ``r2`` are the largest off-diagonal entries of ``q1``, ``q2``.
    """
    n = spec.n
    r1 = float(spec.mean_a().max()) if n > 1 else 0.0
    r2 = float(spec.mean_b().max()) if n > 1 else 0.0
    bound_a, bound_b = 2 * math.sqrt(r1) * n, 2 * math.sqrt(r2) * n
    ea, eb = spec.mean_a(), spec.mean_b()
    na, nb = [], []
    for s in seeds:
        pair = sample_pair(spec, s)
        na.append(float(np.linalg.norm(pair.a - ea)))
        nb.append(float(np.linalg.norm(pair.b - eb)))
    return ConcentrationReport(tuple(int(s) for s in seeds), tuple(na), tuple(nb),
                               bound_a, bound_b)
