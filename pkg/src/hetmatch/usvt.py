"""Singular value thresholding estimates of edge-probability matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "UsvtOptions",
    "UsvtEstimate",
    "usvt_estimate",
    "scaled_threshold",
    "elbow_rank",
    "profile_loglik",
    "center",
    "clip_stage",
]


@dataclass(frozen=True)
class UsvtOptions:
    """How to pick the retained singular triples and post-process.

    rule : {"explicit", "scaled", "elbow"}
        ``explicit`` keeps ``sigma > t``; ``scaled`` keeps
        ``sigma > a * sqrt(n * r_hat)``; ``elbow`` keeps the top singular
        values up to the profile-likelihood elbow.
    """

    rule: str = "scaled"
    t: float | None = None
    a: float = 2.01
    r_hat: float | None = None
    n_elbows: int = 1
    clip_to_unit: bool = True
    hollow_output: bool = True

    def __post_init__(self):
        if self.rule == "explicit":
            if self.t is None or not self.t > 0:
                raise ValueError(f"explicit threshold must be > 0, got {self.t}")
        elif self.rule == "scaled":
            if not self.a > 0:
                raise ValueError(f"scale a must be > 0, got {self.a}")
            if self.r_hat is None or not 0 < self.r_hat <= 1:
                raise ValueError(f"r_hat must lie in (0, 1], got {self.r_hat}")
        elif self.rule == "elbow":
            if int(self.n_elbows) < 1:
                raise ValueError(f"n_elbows must be >= 1, got {self.n_elbows}")
        else:
            raise ValueError(f"unknown threshold rule {self.rule!r}")

    @classmethod
    def explicit(cls, t: float, **kw) -> "UsvtOptions":
        return cls(rule="explicit", t=t, **kw)

    @classmethod
    def scaled(cls, a: float, r_hat: float, **kw) -> "UsvtOptions":
        return cls(rule="scaled", a=a, r_hat=r_hat, **kw)

    @classmethod
    def elbow(cls, n_elbows: int = 1, **kw) -> "UsvtOptions":
        return cls(rule="elbow", n_elbows=n_elbows, **kw)


@dataclass(frozen=True)
class UsvtEstimate:
    q_hat: np.ndarray
    retained_rank: int
    singular_values: np.ndarray
    threshold_used: float


def scaled_threshold(n: int, r_hat: float, a: float) -> float:
    """``a * sqrt(n * r_hat)``."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0 < r_hat <= 1:
        raise ValueError(f"r_hat must lie in (0, 1], got {r_hat}")
    if not a > 0:
        raise ValueError(f"a must be > 0, got {a}")
    return a * math.sqrt(n * r_hat)


def _split_rss(x: np.ndarray) -> np.ndarray:
    """Pooled residual sum of squares for every split ``q = 1..len-1``."""
    n = x.size
    q = np.arange(1, n)
    csum = np.cumsum(x)
    csq = np.cumsum(x * x)
    head_sum, head_sq = csum[:-1], csq[:-1]
    tail_sum, tail_sq = csum[-1] - head_sum, csq[-1] - head_sq
    rss = (head_sq - head_sum ** 2 / q) + (tail_sq - tail_sum ** 2 / (n - q))
    return np.maximum(rss, 0.0)


def profile_loglik(values) -> np.ndarray:
    """Profile log-likelihood of each split of a scree list.

    Entry ``q - 1`` is the maximised Gaussian log-likelihood when the first
    ``q`` values share one mean, the rest another, and both share a single
    variance.  Splits with zero residual give ``+inf``.
    """
    x = np.asarray(values, dtype=float)
    n = x.size
    rss = _split_rss(x)
    with np.errstate(divide="ignore"):
        return -0.5 * n * (np.log(rss / n) + 1.0 + math.log(2 * math.pi))


def elbow_rank(singular_values, n_elbows: int = 1) -> int:
    """Cut position of the ``n_elbows``-th successive scree elbow.

    Each elbow maximises the equal-variance two-segment profile likelihood
    over the remaining tail; ties go to the earliest split.  Returns a value
    in ``[1, len(singular_values)]``.
    """
    x = np.asarray(singular_values, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("singular_values must be a nonempty 1-D list")
    if np.any(np.diff(x) > 0) or np.any(x < 0):
        raise ValueError("singular_values must be nonnegative and descending")
    if n_elbows < 1:
        raise ValueError(f"n_elbows must be >= 1, got {n_elbows}")
    cut = 0
    tail = x
    for _ in range(n_elbows):
        if tail.size < 2:
            break
        # Maximal likelihood == minimal pooled residual.
        cut += int(np.argmin(_split_rss(tail))) + 1
        tail = x[cut:]
    return max(cut, 1)


def clip_stage(m: np.ndarray) -> np.ndarray:
    return np.clip(m, 0.0, 1.0)


def usvt_estimate(a, opts: UsvtOptions) -> UsvtEstimate:
    """Low-rank estimate of ``E(a)`` from its leading singular triples.

    Keeps the triples with ``sigma > t`` (strict) or the top ``k`` from the
    elbow rule, symmetrises the truncation, then optionally clips to
    ``[0, 1]`` and zeroes the diagonal.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"input must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise FloatingPointError("input has non-finite entries")
    n = a.shape[0]
    u, s, vt = np.linalg.svd(a)
    if opts.rule == "elbow":
        rank = elbow_rank(s, opts.n_elbows) if n else 0
        # Report the threshold as the smallest retained singular value.
        threshold = float(s[rank - 1]) if rank else 0.0
    else:
        threshold = opts.t if opts.rule == "explicit" else scaled_threshold(n, opts.r_hat, opts.a)
        rank = int(np.count_nonzero(s > threshold))
    trunc = (u[:, :rank] * s[:rank]) @ vt[:rank]
    q_hat = 0.5 * (trunc + trunc.T)
    if opts.clip_to_unit:
        q_hat = clip_stage(q_hat)
    if opts.hollow_output:
        np.fill_diagonal(q_hat, 0.0)
    return UsvtEstimate(q_hat, rank, s, float(threshold))


def center(a, q_hat) -> np.ndarray:
    """``a - q_hat``; entries may go negative."""
    a = np.asarray(a, dtype=float)
    q_hat = np.asarray(q_hat, dtype=float)
    if a.shape != q_hat.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {q_hat.shape}")
    return a - q_hat
