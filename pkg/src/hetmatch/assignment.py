"""Exact linear assignment over permutations.

Permutations act on vertex labels ``0..n-1``.  A permutation with image
``tau`` corresponds to the matrix ``P`` with ``P[i, tau[i]] = 1``, so that
``(P B P^T)[i, j] = B[tau[i], tau[j]]``: vertex ``i`` of the first graph is
matched to vertex ``tau[i]`` of the second.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

__all__ = [
    "Permutation",
    "solve_lap_max",
    "brute_force_lap",
    "LEXICOGRAPHIC_MAX_N",
    "BRUTE_FORCE_MAX_N",
]

# Above this size the solver's own (deterministic) choice among optima is kept.
LEXICOGRAPHIC_MAX_N = 9
BRUTE_FORCE_MAX_N = 9
_TIE_ATOL = 1e-9


@dataclass(frozen=True)
class Permutation:
    """A bijection on ``{0, ..., n-1}`` stored as its image tuple."""

    image: tuple[int, ...]

    def __init__(self, image: Iterable[int]):
        img = tuple(int(i) for i in image)
        n = len(img)
        if sorted(img) != list(range(n)):
            raise ValueError(f"not a permutation of 0..{n - 1}: {img!r}")
        object.__setattr__(self, "image", img)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(range(n))

    @classmethod
    def from_matrix(cls, p) -> "Permutation":
        p = np.asarray(p)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValueError("permutation matrix must be square")
        if not np.all((p == 0) | (p == 1)):
            raise ValueError("permutation matrix entries must be 0 or 1")
        if not (np.all(p.sum(axis=0) == 1) and np.all(p.sum(axis=1) == 1)):
            raise ValueError("permutation matrix must have one 1 per row and column")
        return cls(np.argmax(p, axis=1))

    def __len__(self) -> int:
        return len(self.image)

    def __getitem__(self, i: int) -> int:
        return self.image[i]

    def __iter__(self):
        return iter(self.image)

    @property
    def n(self) -> int:
        return len(self.image)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.image, dtype=np.intp)

    def matrix(self) -> np.ndarray:
        m = np.zeros((self.n, self.n))
        m[np.arange(self.n), self.array] = 1.0
        return m

    @property
    def fixed_point_count(self) -> int:
        return sum(1 for i, t in enumerate(self.image) if i == t)

    @property
    def moved_count(self) -> int:
        """Number of labels not fixed (the ``k`` of the class Pi(n, k))."""
        return self.n - self.fixed_point_count

    @property
    def transposition_count(self) -> int:
        """Number of 2-cycles ``{u, v}`` with ``u -> v`` and ``v -> u``."""
        img = self.image
        return sum(1 for u, v in enumerate(img) if u < v and img[v] == u)

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for i, t in enumerate(self.image):
            inv[t] = i
        return Permutation(inv)

    def compose(self, other: "Permutation") -> "Permutation":
        """``(self o other)(i) = self(other(i))``."""
        if other.n != self.n:
            raise ValueError("permutations act on different sizes")
        return Permutation(self.image[j] for j in other.image)

    def power(self, k: int) -> "Permutation":
        out = Permutation.identity(self.n)
        for _ in range(k):
            out = self.compose(out)
        return out

    def is_identity(self) -> bool:
        return all(i == t for i, t in enumerate(self.image))

    def __repr__(self) -> str:
        return f"Permutation({list(self.image)})"


def _as_score(score) -> np.ndarray:
    s = np.asarray(score, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError(f"score must be a square matrix, got shape {s.shape}")
    if not np.all(np.isfinite(s)):
        raise FloatingPointError("score matrix has non-finite entries")
    return s


def _lap_value(s: np.ndarray) -> float:
    if s.shape[0] == 0:
        return 0.0
    rows, cols = linear_sum_assignment(s, maximize=True)
    return float(s[rows, cols].sum())


def _lexicographic_optimum(s: np.ndarray, value: float) -> np.ndarray:
    # Row by row, take the smallest column that still admits an optimal completion.
    n = s.shape[0]
    tol = _TIE_ATOL * max(1.0, abs(value))
    rows = list(range(n))
    free = list(range(n))
    image = np.empty(n, dtype=np.intp)
    acc = 0.0
    for i in rows:
        rest_rows = rows[i + 1:]
        for j in free:
            rest_cols = [c for c in free if c != j]
            rest = _lap_value(s[np.ix_(rest_rows, rest_cols)])
            if acc + s[i, j] + rest >= value - tol:
                image[i] = j
                acc += s[i, j]
                free = rest_cols
                break
        else:  # pragma: no cover - guarded by the optimum existing
            raise RuntimeError("lexicographic scan lost the optimum")
    return image


def solve_lap_max(score, lexicographic: bool | None = None) -> tuple[Permutation, float]:
    """Maximise ``sum_i score[i, image[i]]`` over permutations.

    Parameters
    ----------
    score : array_like, shape (n, n)
        Finite real scores.
    lexicographic : bool, optional
        Return the lexicographically smallest optimal image.  Defaults to
        ``n <= LEXICOGRAPHIC_MAX_N``; larger problems keep the solver's own
        deterministic choice.

    Returns
    -------
    perm : Permutation
    value : float
        The optimal total score.
    """
    s = _as_score(score)
    n = s.shape[0]
    if n == 0:
        return Permutation(()), 0.0
    rows, cols = linear_sum_assignment(s, maximize=True)
    value = float(s[rows, cols].sum())
    if lexicographic is None:
        lexicographic = n <= LEXICOGRAPHIC_MAX_N
    if lexicographic:
        cols = _lexicographic_optimum(s, value)
        value = float(s[np.arange(n), cols].sum())
    return Permutation(cols), value


def brute_force_lap(score) -> tuple[Permutation, float]:
    """Exhaustive maximisation over all ``n!`` permutations (test oracle).

    Ties resolve to the lexicographically smallest image, matching
    :func:`solve_lap_max`.
    """
    s = _as_score(score)
    n = s.shape[0]
    if n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute force limited to n <= {BRUTE_FORCE_MAX_N}, got {n}")
    if n == 0:
        return Permutation(()), 0.0
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.intp)
    values = s[np.arange(n), perms].sum(axis=1)
    best = values.max()
    tol = _TIE_ATOL * max(1.0, abs(best))
    idx = int(np.flatnonzero(values >= best - tol)[0])
    return Permutation(perms[idx]), float(values[idx])


def all_permutations(n: int) -> Sequence[Permutation]:
    return [Permutation(p) for p in itertools.permutations(range(n))]
