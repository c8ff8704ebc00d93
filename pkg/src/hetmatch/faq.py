"""Frank-Wolfe relaxation of graph matching over doubly stochastic matrices.

The relaxed objective is ``g(D) = -tr(A D B D^T)`` on the Birkhoff polytope.
Each step takes the linear-assignment vertex minimising ``<grad g(D), Q>``,
moves to the exact minimiser of ``g`` on the segment ``[D, Q]``, and the
final iterate is projected onto the nearest permutation by another linear
assignment.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .assignment import Permutation, solve_lap_max

__all__ = [
    "DS_ATOL",
    "MatchOptions",
    "MatchResult",
    "gm_objective",
    "relaxed_objective",
    "relaxed_gradient",
    "exact_line_search",
    "faq_match",
    "frank_wolfe",
    "is_doubly_stochastic",
    "random_ds",
    "restart_seed",
]

DS_ATOL = 1e-8


def _pair(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape != b.shape:
        raise ValueError(f"a and b must be square with equal shape: {a.shape}, {b.shape}")
    return a, b


def is_doubly_stochastic(d, atol: float = DS_ATOL) -> bool:
    d = np.asarray(d, dtype=float)
    return bool(np.all(d >= -1e-12)
                and np.allclose(d.sum(axis=0), 1.0, rtol=0, atol=atol)
                and np.allclose(d.sum(axis=1), 1.0, rtol=0, atol=atol))


def gm_objective(a, b, p: Permutation) -> tuple[float, float]:
    """Return ``(||a - P b P^T||_F^2, -tr(a P b P^T))``."""
    a, b = _pair(a, b)
    if len(p) != a.shape[0]:
        raise ValueError(f"permutation size {len(p)} != graph size {a.shape[0]}")
    tau = p.array
    pb = b[np.ix_(tau, tau)]
    return float(np.sum((a - pb) ** 2)), float(-np.sum(a * pb))


def relaxed_objective(a, b, d) -> float:
    """``-tr(a d b d^T)``."""
    return float(-np.sum((a @ d @ b) * d))


def relaxed_gradient(a, b, d) -> np.ndarray:
    """Gradient of ``-tr(a d b d^T)`` for symmetric ``a``, ``b``: ``-2 a d b``."""
    a, b = _pair(a, b)
    d = np.asarray(d, dtype=float)
    if d.shape != a.shape:
        raise ValueError(f"d has shape {d.shape}, expected {a.shape}")
    return -2.0 * (a @ d @ b)


def _step_from_coeffs(c1: float, c2: float) -> float:
    # Minimise c1*t + c2*t^2 on [0, 1]; ties resolve to 0.
    if c2 > 0:
        return float(min(1.0, max(0.0, -c1 / (2.0 * c2))))
    if c2 == 0:
        return 1.0 if c1 < 0 else 0.0
    return 1.0 if c1 + c2 < 0 else 0.0


def exact_line_search(a, b, d, q: Permutation) -> float:
    """Exact minimiser over ``alpha in [0, 1]`` of ``g((1 - alpha) d + alpha Q)``.

    With ``R = Q - d`` the objective is ``g(d) + alpha c1 + alpha^2 c2`` where
    ``c1 = -tr(a R b d^T) - tr(a d b R^T)`` and ``c2 = -tr(a R b R^T)``.
    A concave segment returns the better endpoint; exact ties return 0.
    """
    a, b = _pair(a, b)
    d = np.asarray(d, dtype=float)
    r = q.matrix() - d
    arb = a @ r @ b
    c1 = -np.sum(arb * d) - np.sum((a @ d @ b) * r)
    c2 = -np.sum(arb * r)
    return _step_from_coeffs(float(c1), float(c2))


@dataclass(frozen=True)
class MatchOptions:
    """Frank-Wolfe settings.

    ``init`` is ``"barycenter"``, ``"random"`` (half barycenter, half a
    random permutation drawn from ``seed``) or a :class:`Permutation`.
    ``restarts`` is the total number of runs: the first uses ``init`` and the
    others random starts whose seeds derive from ``seed``.
    """

    max_iters: int = 30
    rel_tol: float = 1e-6
    init: object = "barycenter"
    restarts: int = 1
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if int(self.max_iters) < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be > 0, got {self.rel_tol}")
        if int(self.restarts) < 1:
            raise ValueError(f"restarts must be >= 1, got {self.restarts}")
        if isinstance(self.init, str):
            if self.init not in ("barycenter", "random"):
                raise ValueError(f"unknown init {self.init!r}")
        elif not isinstance(self.init, Permutation):
            object.__setattr__(self, "init", Permutation(self.init))


@dataclass(frozen=True)
class MatchResult:
    permutation: Permutation
    objective: float
    trace_objective: float
    iterations: int
    converged: bool
    init_label: str
    relaxed_trace: tuple[float, ...] = field(default=(), repr=False)


def restart_seed(seed: int, index: int) -> int:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, np.uint64)[0])


def random_ds(n: int, seed: int) -> np.ndarray:
    """``0.5 * J/n + 0.5 * P`` for a permutation ``P`` drawn from ``seed``."""
    perm = np.random.default_rng(seed).permutation(n)
    return 0.5 * np.full((n, n), 1.0 / n) + 0.5 * Permutation(perm).matrix()


def frank_wolfe(a, b, d0, max_iters: int = 30, rel_tol: float = 1e-6,
                callback: Callable[[int, np.ndarray, float], None] | None = None):
    """Run the relaxed iteration from ``d0``.

    Returns ``(d, trace, iterations, converged)`` where ``trace`` holds
    ``g`` at the start and after every step.  ``callback(k, d, g)`` is
    called after each update.
    """
    d = np.array(d0, dtype=float)
    adb = a @ d @ b
    g = float(-np.sum(adb * d))
    trace = [g]
    converged = False
    it = 0
    while it < max_iters:
        it += 1
        grad = -2.0 * adb
        q, _ = solve_lap_max(-grad, lexicographic=False)
        tau = q.array
        # a Q b == a @ b[tau, :]
        aqb = a @ b[tau, :]
        r = q.matrix() - d
        arb = aqb - adb
        c1 = float(np.sum(grad * r))
        c2 = float(-np.sum(arb * r))
        step = _step_from_coeffs(c1, c2)
        g_new = g + step * c1 + step * step * c2
        if step > 0:
            d = d + step * r
            adb = adb + step * arb
        if callback is not None:
            callback(it, d, g_new)
        decrease = g - g_new
        g = g_new
        trace.append(g)
        if step == 0 or decrease <= rel_tol * max(abs(trace[-2]), np.finfo(float).tiny):
            converged = True
            break
    return d, tuple(trace), it, converged


def _initial(opts_init, n: int, seed: int):
    if isinstance(opts_init, Permutation):
        if len(opts_init) != n:
            raise ValueError(f"init permutation has size {len(opts_init)}, expected {n}")
        return opts_init.matrix(), "permutation"
    if opts_init == "barycenter":
        return np.full((n, n), 1.0 / n), "barycenter"
    return random_ds(n, seed), f"random:{seed}"


def _single_run(a, b, opts: MatchOptions, init, seed: int) -> MatchResult:
    n = a.shape[0]
    d0, label = _initial(init, n, seed)
    d, trace, iters, converged = frank_wolfe(a, b, d0, opts.max_iters, opts.rel_tol)
    perm, _ = solve_lap_max(d, lexicographic=False)
    frob, tr = gm_objective(a, b, perm)
    return MatchResult(perm, frob, tr, iters, converged, label, trace)


def faq_match(a, b, opts: MatchOptions | None = None) -> MatchResult:
    """Match ``b`` onto ``a`` by Frank-Wolfe on the relaxed problem.

    Inputs may be weighted or centred (negative entries allowed).  Across
    restarts the smallest ``||a - P b P^T||_F^2`` wins, then the fewest
    iterations, then the earliest run.
    """
    opts = opts or MatchOptions()
    a, b = _pair(a, b)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise FloatingPointError("non-finite entries in a or b")
    n = a.shape[0]
    if n == 0:
        return MatchResult(Permutation(()), 0.0, 0.0, 0, True, "empty")
    runs = [(opts.init, opts.seed)]
    runs += [("random", restart_seed(opts.seed, r)) for r in range(1, opts.restarts)]
    if opts.threads > 1 and len(runs) > 1:
        with ThreadPoolExecutor(opts.threads) as pool:
            results = list(pool.map(lambda rs: _single_run(a, b, opts, *rs), runs))
    else:
        results = [_single_run(a, b, opts, init, seed) for init, seed in runs]
    best = min(range(len(results)),
               key=lambda i: (results[i].objective, results[i].iterations, i))
    return results[best]
