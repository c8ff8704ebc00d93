"""Correlated heterogeneous Erdos-Renyi graph pairs.

A model is the triple ``(Q1, Q2, R)``: marginal edge probabilities for each
graph and the entrywise Pearson correlation between ``A(u, v)`` and
``B(u, v)``.  Pairs are sampled from three independent Bernoulli variables
per vertex pair::

    A = Z0,    B = Z0 * Z2 + (1 - Z0) * Z1

Random numbers come from a counter-based Philox generator keyed by the
sample seed.  The ``k``-th vertex pair in row-major ``u < v`` order consumes
the 64-bit words ``3k, 3k+1, 3k+2`` of the stream (one uniform each for
``Z0, Z1, Z2``), so any pair's draws can be regenerated independently with
``Philox(key=seed).advance``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .assignment import Permutation

__all__ = [
    "FEASIBILITY_ATOL",
    "FeasibilityError",
    "InvalidSpecError",
    "Violation",
    "CorrSpec",
    "GraphPair",
    "max_feasible_correlation",
    "validate_spec",
    "bibern_params",
    "sample_pair",
    "pair_uniforms",
    "sbm_spec",
    "block_spec",
    "homogeneous_spec",
    "expected_trace",
    "block_swap",
]

FEASIBILITY_ATOL = 1e-12
_SYM_ATOL = 1e-12


class FeasibilityError(ValueError):
    """A correlation exceeds what the marginals allow."""


class InvalidSpecError(ValueError):
    """A model triple violates one or more invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        head = "; ".join(str(v) for v in self.violations[:5])
        more = len(self.violations) - 5
        if more > 0:
            head += f"; ... ({more} more)"
        super().__init__(f"invalid model: {head}")


@dataclass(frozen=True)
class Violation:
    u: int
    v: int
    rule: str
    detail: str

    def __str__(self) -> str:
        return f"({self.u}, {self.v}) {self.rule}: {self.detail}"


def _frozen(x) -> np.ndarray:
    a = np.array(x, dtype=float)
    a.setflags(write=False)
    return a


def _is_degenerate(p):
    return (p <= 0.0) | (p >= 1.0)


def max_feasible_correlation(p: float, q: float) -> float:
    """Largest correlation of a bivariate Bernoulli with marginals ``p, q``.

    >>> max_feasible_correlation(0.8, 0.2)
    0.25
    """
    if not (0.0 <= p <= 1.0 and 0.0 <= q <= 1.0):
        raise ValueError(f"marginals must lie in [0, 1], got ({p}, {q})")
    if _is_degenerate(p) or _is_degenerate(q):
        return 0.0
    cov_max = min(p * (1.0 - q), q * (1.0 - p))
    return min(1.0, cov_max / math.sqrt(p * (1.0 - p) * q * (1.0 - q)))


@dataclass(frozen=True)
class CorrSpec:
    """Model triple ``(q1, q2, r)`` on ``n`` vertices with a core of ``n_core``.

    Structural problems (shape, asymmetry) raise on construction; the
    probabilistic invariants are reported by :func:`validate_spec`.  The
    diagonals of all three matrices are ignored: graphs are loop-free.
    """

    q1: np.ndarray
    q2: np.ndarray
    r: np.ndarray
    n_core: int = None  # type: ignore[assignment]

    def __post_init__(self):
        q1, q2, r = (_frozen(m) for m in (self.q1, self.q2, self.r))
        for name, m in (("q1", q1), ("q2", q2), ("r", r)):
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValueError(f"{name} must be square, got shape {m.shape}")
            if not np.all(np.isfinite(m)):
                raise ValueError(f"{name} has non-finite entries")
            if not np.allclose(m, m.T, rtol=0, atol=_SYM_ATOL):
                raise ValueError(f"{name} must be symmetric")
        if not (q1.shape == q2.shape == r.shape):
            raise ValueError(f"shape mismatch: q1 {q1.shape}, q2 {q2.shape}, r {r.shape}")
        n = q1.shape[0]
        n_core = n if self.n_core is None else int(self.n_core)
        if not 0 <= n_core <= n:
            raise ValueError(f"n_core must lie in [0, {n}], got {n_core}")
        object.__setattr__(self, "q1", q1)
        object.__setattr__(self, "q2", q2)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "n_core", n_core)

    @property
    def n(self) -> int:
        return self.q1.shape[0]

    def covariance(self) -> np.ndarray:
        """Entrywise ``Cov(A(u,v), B(u,v))``, hollow."""
        var = self.q1 * (1 - self.q1) * self.q2 * (1 - self.q2)
        cov = self.r * np.sqrt(np.clip(var, 0.0, None))
        np.fill_diagonal(cov, 0.0)
        return cov

    def mean_a(self) -> np.ndarray:
        """``E(A)``: ``q1`` with its diagonal zeroed."""
        m = np.array(self.q1)
        np.fill_diagonal(m, 0.0)
        return m

    def mean_b(self) -> np.ndarray:
        m = np.array(self.q2)
        np.fill_diagonal(m, 0.0)
        return m

    def validate(self) -> list[Violation]:
        return validate_spec(self)

    def check(self) -> "CorrSpec":
        violations = validate_spec(self)
        if violations:
            raise InvalidSpecError(violations)
        return self

    def with_core(self, n_core: int) -> "CorrSpec":
        return CorrSpec(self.q1, self.q2, self.r, n_core)


@dataclass(frozen=True)
class GraphPair:
    """Two loop-free symmetric graphs on a common vertex set.

    The latent alignment is the identity.  ``n_core`` leading vertices have
    a true counterpart; the rest are junk.
    """

    a: np.ndarray
    b: np.ndarray
    n_core: int = None  # type: ignore[assignment]
    weighted: bool = False
    spec: CorrSpec | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        a, b = _frozen(self.a), _frozen(self.b)
        if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"a and b must be square with equal shape: {a.shape}, {b.shape}")
        for name, m in (("a", a), ("b", b)):
            if not np.array_equal(m, m.T):
                raise ValueError(f"{name} must be symmetric")
            if np.any(np.diag(m) != 0):
                raise ValueError(f"{name} must have a zero diagonal")
            if not self.weighted and not np.all((m == 0) | (m == 1)):
                raise ValueError(f"{name} must be 0/1 for an unweighted pair")
        n_core = a.shape[0] if self.n_core is None else int(self.n_core)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "n_core", n_core)

    @property
    def n(self) -> int:
        return self.a.shape[0]


def validate_spec(spec: CorrSpec) -> list[Violation]:
    """List every violated invariant, one entry per offending pair ``u < v``."""
    q1, q2, r = spec.q1, spec.q2, spec.r
    n = spec.n
    iu, iv = np.triu_indices(n, 1)
    p, q, rho = q1[iu, iv], q2[iu, iv], r[iu, iv]
    out: list[Violation] = []

    def add(mask, rule, fmt):
        for k in np.flatnonzero(mask):
            out.append(Violation(int(iu[k]), int(iv[k]), rule, fmt(k)))

    bad_p = (p < 0) | (p > 1)
    bad_q = (q < 0) | (q > 1)
    add(bad_p, "q1 range", lambda k: f"q1={p[k]!r} outside [0, 1]")
    add(bad_q, "q2 range", lambda k: f"q2={q[k]!r} outside [0, 1]")
    add(rho < 0, "r nonnegative", lambda k: f"r={rho[k]!r} < 0")

    ok = ~(bad_p | bad_q) & (rho >= 0)
    degenerate = ok & (_is_degenerate(p) | _is_degenerate(q))
    add(degenerate & (rho != 0), "degenerate marginal",
        lambda k: f"q1={p[k]!r}, q2={q[k]!r} force r=0, got r={rho[k]!r}")

    live = ok & ~degenerate
    lhs = rho * np.sqrt(np.clip(p * (1 - p) * q * (1 - q), 0, None))
    rhs = np.minimum(p * (1 - q), q * (1 - p))
    add(live & (lhs > rhs + FEASIBILITY_ATOL), "feasibility",
        lambda k: (f"cov {lhs[k]:.6g} exceeds min(q1(1-q2), q2(1-q1)) = {rhs[k]:.6g}; "
                   f"max correlation {max_feasible_correlation(p[k], q[k]):.6g}, got {rho[k]!r}"))

    if spec.n_core < n:
        junk = (iu >= spec.n_core) | (iv >= spec.n_core)
        add(junk & (rho != 0), "core-junk",
            lambda k: f"junk pair must have r=0 (n_core={spec.n_core}), got r={rho[k]!r}")
    out.sort(key=lambda v: (v.u, v.v))
    return out


def _bibern_arrays(p, q, rho):
    """Vectorised ``(z0, z1, z2)``; callers guarantee feasibility."""
    degenerate = _is_degenerate(p)
    cov = np.where(_is_degenerate(p) | _is_degenerate(q), 0.0,
                   rho * np.sqrt(np.clip(p * (1 - p) * q * (1 - q), 0, None)))
    with np.errstate(divide="ignore", invalid="ignore"):
        z1 = np.where(degenerate, q, (q * (1 - p) - cov) / (1 - p))
        z2 = np.where(degenerate, q, (q * p + cov) / p)
    return p, np.clip(z1, 0.0, 1.0), np.clip(z2, 0.0, 1.0)


def bibern_params(p: float, q: float, rho: float) -> tuple[float, float, float]:
    """Bernoulli parameters of the independent triple ``(Z0, Z1, Z2)``.

    ``Z0 ~ Bern(p)``, ``Z1 ~ Bern((q(1-p) - cov)/(1-p))`` and
    ``Z2 ~ Bern((qp + cov)/p)`` with ``cov = rho * sqrt(p(1-p)q(1-q))``.
    When ``p`` is 0 or 1 the undefined quotient is replaced by ``q`` and the
    covariance is taken as 0.
    """
    if not (0.0 <= p <= 1.0 and 0.0 <= q <= 1.0):
        raise ValueError(f"marginals must lie in [0, 1], got ({p}, {q})")
    if rho < 0:
        raise FeasibilityError(f"correlation must be nonnegative, got {rho}")
    if _is_degenerate(p) or _is_degenerate(q):
        if rho != 0:
            raise FeasibilityError(
                f"degenerate marginal ({p}, {q}) requires zero correlation, got {rho}")
    else:
        bound = min(p * (1 - q), q * (1 - p))
        cov = rho * math.sqrt(p * (1 - p) * q * (1 - q))
        if cov > bound + FEASIBILITY_ATOL:
            raise FeasibilityError(
                f"correlation {rho} exceeds the maximum "
                f"{max_feasible_correlation(p, q)} for marginals ({p}, {q})")
    z0, z1, z2 = _bibern_arrays(np.float64(p), np.float64(q), np.float64(rho))
    return float(z0), float(z1), float(z2)


def pair_uniforms(seed: int, n_pairs: int, start: int = 0) -> np.ndarray:
    """Uniforms for pairs ``start .. start+n_pairs-1``, shape ``(n_pairs, 3)``."""
    bitgen = np.random.Philox(key=int(seed) & 0xFFFFFFFFFFFFFFFF)
    if start:
        # One Philox counter step yields four 64-bit words.
        words = 3 * start
        bitgen.advance(words // 4)
        gen = np.random.Generator(bitgen)
        gen.random(words % 4)
    else:
        gen = np.random.Generator(bitgen)
    return gen.random((n_pairs, 3))


def sample_pair(spec: CorrSpec, seed: int) -> GraphPair:
    """Draw ``(A, B)`` from the model; deterministic in ``seed``."""
    spec.check()
    n = spec.n
    iu, iv = np.triu_indices(n, 1)
    z0, z1, z2 = _bibern_arrays(spec.q1[iu, iv], spec.q2[iu, iv], spec.r[iu, iv])
    u = pair_uniforms(seed, iu.size)
    x0 = u[:, 0] < z0
    x1 = u[:, 1] < z1
    x2 = u[:, 2] < z2
    a_vals = x0.astype(float)
    b_vals = np.where(x0, x2, x1).astype(float)
    a = np.zeros((n, n))
    b = np.zeros((n, n))
    a[iu, iv] = a_vals
    a[iv, iu] = a_vals
    b[iu, iv] = b_vals
    b[iv, iu] = b_vals
    return GraphPair(a, b, n_core=spec.n_core, weighted=False, spec=spec)


def _check_block_matrix(name, m, k):
    m = np.asarray(m, dtype=float)
    if m.shape != (k, k):
        raise ValueError(f"{name} must be {k}x{k}, got {m.shape}")
    if not np.allclose(m, m.T, rtol=0, atol=_SYM_ATOL):
        raise ValueError(f"{name} must be symmetric")
    return m


def block_spec(labels: Sequence[int], q1_blocks, q2_blocks, r_blocks,
               n_core: int | None = None) -> CorrSpec:
    """Expand per-block constants over an arbitrary vertex labelling.

    Raises :class:`FeasibilityError` naming the first infeasible block pair.
    Correlations of junk vertices (index ``>= n_core``) are set to zero.
    """
    labels = np.asarray(labels, dtype=np.intp)
    k = int(np.asarray(q1_blocks).shape[0])
    q1b = _check_block_matrix("q1_blocks", q1_blocks, k)
    q2b = _check_block_matrix("q2_blocks", q2_blocks, k)
    rb = _check_block_matrix("r_blocks", r_blocks, k)
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise ValueError(f"block labels must lie in [0, {k})")
    for i in range(k):
        for j in range(i, k):
            p, q, rho = q1b[i, j], q2b[i, j], rb[i, j]
            if not (0 <= p <= 1 and 0 <= q <= 1):
                raise FeasibilityError(f"block ({i}, {j}): probabilities ({p}, {q}) outside [0, 1]")
            try:
                bibern_params(p, q, rho)
            except FeasibilityError as exc:
                raise FeasibilityError(f"block ({i}, {j}): {exc}") from None
    q1 = q1b[np.ix_(labels, labels)]
    q2 = q2b[np.ix_(labels, labels)]
    r = rb[np.ix_(labels, labels)].copy()
    n = labels.size
    if n_core is not None and n_core < n:
        r[n_core:, :] = 0.0
        r[:, n_core:] = 0.0
    return CorrSpec(q1, q2, r, n_core).check()


def sbm_spec(block_sizes: Sequence[int], q1_blocks, q2_blocks, r_blocks,
             n_core: int | None = None) -> CorrSpec:
    """Stochastic-blockmodel triple with contiguous blocks.

    A block whose correlations with every block are all zero, while some
    other block is correlated, reads as junk; such layouts must declare
    ``n_core`` explicitly, and the junk blocks must then sit after it.
    """
    sizes = [int(s) for s in block_sizes]
    if any(s < 0 for s in sizes):
        raise ValueError(f"block sizes must be nonnegative: {sizes}")
    labels = np.repeat(np.arange(len(sizes)), sizes)
    rb = np.asarray(r_blocks, dtype=float)
    if rb.shape == (len(sizes), len(sizes)):
        silent = [i for i in range(len(sizes)) if sizes[i] and not np.any(rb[i] != 0)]
        loud = any(np.any(rb[i] != 0) for i in range(len(sizes)) if sizes[i])
        if silent and loud:
            if n_core is None:
                raise InvalidSpecError([Violation(
                    -1, -1, "core-junk",
                    f"blocks {silent} are uncorrelated with every block; declare n_core")])
            starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
            for i in silent:
                if starts[i] < n_core:
                    raise InvalidSpecError([Violation(
                        int(starts[i]), -1, "core-junk",
                        f"block {i} is uncorrelated but starts inside the core (n_core={n_core})")])
    spec = block_spec(labels, q1_blocks, q2_blocks, r_blocks, n_core=None)
    if n_core is not None:
        spec = spec.with_core(n_core).check()
    return spec


def homogeneous_spec(n: int, p: float, q: float, rho: float,
                     n_core: int | None = None) -> CorrSpec:
    return block_spec(np.zeros(n, dtype=np.intp), [[p]], [[q]], [[rho]], n_core=n_core)


def block_swap(n_per_block: int) -> Permutation:
    """Permutation exchanging two contiguous blocks of equal size."""
    m = n_per_block
    return Permutation(list(range(m, 2 * m)) + list(range(m)))


def expected_trace(spec: CorrSpec, p: Permutation) -> float:
    """``(1/2) E tr(A P B P^T)``, computed in closed form.

    Vertex pairs mapped onto themselves (as a set) contribute
    ``cov + q1 q2``; every other pair contributes ``q1(u,v) q2(tau u, tau v)``.
    """
    if len(p) != spec.n:
        raise ValueError(f"permutation size {len(p)} != model size {spec.n}")
    tau = p.array
    iu, iv = np.triu_indices(spec.n, 1)
    tu, tv = tau[iu], tau[iv]
    q1 = spec.q1[iu, iv]
    terms = q1 * spec.q2[tu, tv]
    fixed = ((tu == iu) & (tv == iv)) | ((tu == iv) & (tv == iu))
    terms = terms + np.where(fixed, spec.covariance()[iu, iv], 0.0)
    return float(terms.sum())
