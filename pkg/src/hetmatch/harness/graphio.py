"""Edge-list graph files and block noise injection."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np

from ..corr_er import homogeneous_spec, sample_pair

__all__ = ["GraphFormatError", "load_graph", "write_edge_list", "inject_block_noise"]


class GraphFormatError(ValueError):
    """Malformed or invalid edge-list content."""


def load_graph(path, weighted: bool = False, n_hint: int | None = None) -> np.ndarray:
    """Read a 0-based ``u v`` / ``u v w`` edge list into a symmetric matrix.

    Unweighted duplicates collapse to a single edge; weighted duplicates sum.
    Blank lines and ``#`` comments are skipped.  Self-loops are rejected.
    """
    edges: list[tuple[int, int, float]] = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise GraphFormatError(f"{path}:{lineno}: expected 'u v' or 'u v w', got {raw.rstrip()!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
                w = float(parts[2]) if len(parts) == 3 else 1.0
            except ValueError:
                raise GraphFormatError(f"{path}:{lineno}: cannot parse {raw.rstrip()!r}") from None
            if u < 0 or v < 0:
                raise GraphFormatError(f"{path}:{lineno}: negative vertex id")
            if not np.isfinite(w):
                raise GraphFormatError(f"{path}:{lineno}: non-finite weight")
            if u == v:
                raise GraphFormatError(f"{path}:{lineno}: self-loop at vertex {u}")
            edges.append((u, v, w))
    n = 1 + max((max(u, v) for u, v, _ in edges), default=-1)
    if n_hint is not None:
        if n_hint < n:
            raise GraphFormatError(f"{path}: vertex id {n - 1} exceeds n_hint={n_hint}")
        n = n_hint
    a = np.zeros((n, n))
    for u, v, w in edges:
        if weighted:
            a[u, v] += w
            if u != v:
                a[v, u] += w
        elif w != 0:
            a[u, v] = a[v, u] = 1.0
    return a


def write_edge_list(path, a, weighted: bool = False) -> None:
    a = np.asarray(a)
    iu, iv = np.nonzero(np.triu(a, 1))
    lines = []
    for u, v in zip(iu, iv):
        lines.append(f"{u} {v} {a[u, v]:.10g}" if weighted else f"{u} {v}")
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def inject_block_noise(b, vertex_subset: Sequence[int], q: float, seed: int) -> np.ndarray:
    """Add an ``ER(|S|, q)`` graph to ``b[S, S]`` and re-binarise.

    The noise graph is the first graph of a homogeneous ``(q, q, 0)`` model
    on ``|S|`` vertices sampled with ``seed``.
    """
    b = np.array(b, dtype=float)
    n = b.shape[0]
    subset = np.asarray(vertex_subset, dtype=np.intp)
    if subset.size and (subset.min() < 0 or subset.max() >= n):
        raise IndexError(f"vertex subset has ids outside [0, {n})")
    if np.unique(subset).size != subset.size:
        raise ValueError("vertex subset has repeated ids")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must lie in [0, 1], got {q}")
    if subset.size < 2:
        return b
    c = sample_pair(homogeneous_spec(subset.size, q, q, 0.0), seed).a
    block = np.ix_(subset, subset)
    b[block] = np.minimum(1.0, b[block] + c)
    return b
