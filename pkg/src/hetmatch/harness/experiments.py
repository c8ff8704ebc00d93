"""Seeded Monte-Carlo experiment runners writing CSV tables."""

from __future__ import annotations

import csv
import itertools
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..assignment import Permutation
from ..corr_er import CorrSpec, block_spec, block_swap, homogeneous_spec, sample_pair, sbm_spec
from ..faq import MatchOptions, faq_match
from ..matchability import accuracy
from ..usvt import UsvtOptions, center, usvt_estimate
from .config import ExperimentConfig
from .graphio import inject_block_noise, load_graph

__all__ = [
    "PARAM_COLUMNS",
    "ROW_COLUMNS",
    "SUMMARY_COLUMNS",
    "HETERO_Q1",
    "HETERO_Q2",
    "HETERO_R",
    "ExperimentRow",
    "SummaryRow",
    "derive_seed",
    "grid_points",
    "hetero_spec",
    "core_junk_spec",
    "run_experiment",
    "summarize",
    "write_rows_csv",
    "write_summary_csv",
    "format_value",
    "summary_path",
    "timing_path",
]

# Two-block heterogeneous model: block 0 dense in A and sparse in B, block 1
# the reverse; ``HETERO_R`` is scaled by alpha.
HETERO_Q1 = np.array([[0.8, 0.1], [0.1, 0.2]])
HETERO_Q2 = np.array([[0.2, 0.1], [0.1, 0.8]])
HETERO_R = np.array([[0.25, 0.3], [0.3, 0.25]])

PARAM_COLUMNS = ("n", "alpha", "p", "rho", "n_core", "n_junk", "noise_q", "pair_i", "pair_j")
ROW_COLUMNS = ("experiment", "grid_index", *PARAM_COLUMNS, "replicate", "seed", "centering",
               "init", "accuracy", "core_accuracy", "correct", "objective", "iterations")
SUMMARY_COLUMNS = ("experiment", *PARAM_COLUMNS, "centering", "metric", "mean", "sd", "count")


def derive_seed(master: int, *key: int) -> int:
    """64-bit seed of the substream ``key`` under ``master``."""
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class ExperimentRow:
    experiment: str
    grid_index: int
    params: dict
    replicate: int
    seed: int
    centering: str
    init: str
    accuracy: float
    core_accuracy: float
    correct: int
    objective: float
    iterations: int
    runtime_ms: float = field(default=0.0, compare=False)

    def __post_init__(self):
        if not 0.0 <= self.accuracy <= 1.0 or not 0.0 <= self.core_accuracy <= 1.0:
            raise ValueError(f"accuracy outside [0, 1] in row {self}")

    def values(self) -> dict:
        out = {"experiment": self.experiment, "grid_index": self.grid_index}
        out.update({k: self.params.get(k) for k in PARAM_COLUMNS})
        out.update(replicate=self.replicate, seed=self.seed, centering=self.centering,
                   init=self.init, accuracy=self.accuracy, core_accuracy=self.core_accuracy,
                   correct=self.correct, objective=self.objective, iterations=self.iterations)
        return out


@dataclass(frozen=True)
class SummaryRow:
    experiment: str
    params: dict
    centering: str
    metric: str
    mean: float
    sd: float
    count: int

    def values(self) -> dict:
        out = {"experiment": self.experiment}
        out.update({k: self.params.get(k) for k in PARAM_COLUMNS})
        out.update(centering=self.centering, metric=self.metric, mean=self.mean,
                   sd=self.sd, count=self.count)
        return out


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".10g")
    return str(v)


def _write_csv(fh, columns, records) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(columns)
    for rec in records:
        vals = rec.values()
        w.writerow([format_value(vals[c]) for c in columns])
        fh.flush()


def write_rows_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        _write_csv(fh, ROW_COLUMNS, rows)


def write_summary_csv(path, summary) -> None:
    with open(path, "w", newline="") as fh:
        _write_csv(fh, SUMMARY_COLUMNS, summary)


# -- models -----------------------------------------------------------------

def hetero_spec(n_per_block: int, alpha: float) -> CorrSpec:
    return sbm_spec([n_per_block, n_per_block], HETERO_Q1, HETERO_Q2, alpha * HETERO_R)


def core_junk_spec(n_core: int, n_junk: int, core_cov: float | None = None,
                   core_rho: float | None = None) -> CorrSpec:
    """Two-block heterogeneous marginals with a homogeneous core.

    Core and junk are each split in half between the two blocks (core
    first).  Every core pair has covariance ``core_cov``, or correlation
    ``core_rho`` when that is given instead; junk pairs are uncorrelated.
    """
    labels = ([0] * (n_core - n_core // 2) + [1] * (n_core // 2)
              + [0] * (n_junk - n_junk // 2) + [1] * (n_junk // 2))
    if core_rho is not None:
        r = np.full((2, 2), float(core_rho))
    elif core_cov is not None:
        r = core_cov / np.sqrt(HETERO_Q1 * (1 - HETERO_Q1) * HETERO_Q2 * (1 - HETERO_Q2))
    else:
        raise ValueError("give core_cov or core_rho")
    return block_spec(labels, HETERO_Q1, HETERO_Q2, r, n_core=n_core)


# -- grid -------------------------------------------------------------------

def grid_points(cfg: ExperimentConfig) -> list[dict]:
    """Parameter dicts in row-major grid order."""
    e = cfg.experiment
    if e == "center_cost":
        return [dict(n=n, p=p, rho=r) for n, p, r in itertools.product(cfg.n, cfg.p, cfg.rho)]
    if e in ("figure1_alpha_sweep", "figure2_n_sweep"):
        return [dict(n=n, alpha=a) for n, a in itertools.product(cfg.n, cfg.alpha)]
    if e == "core_junk":
        return [dict(n_core=cfg.n_core, n_junk=j) for j in cfg.n_junk]
    if e == "noise_injection":
        base = {} if cfg.graphs else dict(n=cfg.n[0], p=cfg.p[0], rho=cfg.rho[0])
        return [dict(base, noise_q=q) for q in cfg.noise_q]
    if e == "pairwise_matrix":
        return [dict(pair_i=i, pair_j=j)
                for i, j in itertools.combinations(range(len(cfg.graphs)), 2)]
    raise ValueError(f"unknown experiment {e!r}")


# -- one task ---------------------------------------------------------------

def _rhat(q: np.ndarray, mode: str) -> float:
    off = q[~np.eye(q.shape[0], dtype=bool)]
    r = float(np.max(off * (1 - off))) if mode == "variance" else float(np.max(off))
    if not r > 0:
        raise ValueError("cannot derive a USVT r_hat from a model with no edge variance")
    return r


def _usvt_options(cfg: ExperimentConfig, q: np.ndarray | None) -> UsvtOptions:
    common = dict(clip_to_unit=cfg.usvt_clip, hollow_output=cfg.usvt_hollow)
    if cfg.usvt_rule == "explicit":
        return UsvtOptions.explicit(cfg.usvt_t, **common)
    if cfg.usvt_rule == "elbow":
        return UsvtOptions.elbow(cfg.usvt_elbows, **common)
    if cfg.usvt_rhat is not None:
        r_hat = cfg.usvt_rhat
    elif q is not None:
        r_hat = _rhat(q, cfg.usvt_rhat_mode)
    else:
        r_hat = 1.0
    return UsvtOptions.scaled(cfg.usvt_a, r_hat, **common)


def _build(cfg: ExperimentConfig, point: dict, seed: int, graphs: list):
    """Return ``(a, b, spec_or_None, n_core)`` for one task."""
    e = cfg.experiment
    spec = None
    if e == "center_cost":
        spec = homogeneous_spec(point["n"], point["p"], point["p"], point["rho"])
    elif e in ("figure1_alpha_sweep", "figure2_n_sweep"):
        spec = hetero_spec(point["n"], point["alpha"])
    elif e == "core_junk":
        spec = core_junk_spec(point["n_core"], point["n_junk"], cfg.core_cov, cfg.core_rho)
    if spec is not None:
        pair = sample_pair(spec, derive_seed(seed, 0))
        return pair.a, pair.b, spec, spec.n_core if spec.n_core is not None else spec.n
    if e == "noise_injection":
        if graphs:
            a, b = graphs
        else:
            base = homogeneous_spec(point["n"], point["p"], point["p"], point["rho"])
            pair = sample_pair(base, derive_seed(seed, 0))
            a, b = pair.a, pair.b
        n = a.shape[0]
        rng = np.random.default_rng(derive_seed(seed, 1))
        subset = np.sort(rng.choice(n, size=min(cfg.noise_size, n), replace=False))
        b = inject_block_noise(b, subset, point["noise_q"], derive_seed(seed, 2))
        return a, b, None, n
    a, b = graphs[point["pair_i"]], graphs[point["pair_j"]]
    return a, b, None, a.shape[0]


def _init(name: str, cfg: ExperimentConfig, n: int):
    if name == "identity":
        return Permutation.identity(n)
    if name == "block_swap":
        if cfg.experiment not in ("figure1_alpha_sweep", "figure2_n_sweep"):
            raise ValueError("block_swap init needs the two-block model")
        return block_swap(n // 2)
    return name


def _run_task(cfg: ExperimentConfig, points: list, graphs: list, grid_index: int,
              replicate: int) -> list[ExperimentRow]:
    point = points[grid_index]
    seed = derive_seed(cfg.seed, grid_index, replicate)
    a, b, spec, n_core = _build(cfg, point, seed, graphs)
    n = a.shape[0]
    if a.shape != b.shape:
        raise ValueError(f"graphs differ in size: {a.shape} vs {b.shape}")
    rows = []
    for centering in cfg.centering:
        t0 = time.perf_counter()
        if centering == "none":
            x, y = a, b
        elif centering == "oracle":
            if spec is None:
                raise ValueError(f"oracle centering needs a model; none for {cfg.experiment}")
            x, y = center(a, spec.mean_a()), center(b, spec.mean_b())
        else:
            qa = spec.mean_a() if spec is not None else None
            qb = spec.mean_b() if spec is not None else None
            x = center(a, usvt_estimate(a, _usvt_options(cfg, qa)).q_hat)
            y = center(b, usvt_estimate(b, _usvt_options(cfg, qb)).q_hat)
        best = None
        for name in cfg.inits:
            opts = MatchOptions(max_iters=cfg.max_iters, rel_tol=cfg.rel_tol,
                                init=_init(name, cfg, n), restarts=cfg.restarts,
                                seed=derive_seed(seed, 3))
            res = faq_match(x, y, opts)
            if best is None or res.objective < best[1].objective:
                best = (name, res)
        name, res = best
        perm = res.permutation
        rows.append(ExperimentRow(
            experiment=cfg.experiment, grid_index=grid_index, params=point,
            replicate=replicate, seed=seed, centering=centering, init=name,
            accuracy=accuracy(perm), core_accuracy=accuracy(perm, core=n_core),
            correct=int(np.count_nonzero(perm.array == np.arange(n))),
            objective=res.objective, iterations=res.iterations,
            runtime_ms=1000.0 * (time.perf_counter() - t0)))
    return rows


def _load_graphs(cfg: ExperimentConfig) -> list[np.ndarray]:
    graphs = [load_graph(p, weighted=cfg.weighted) for p in cfg.graphs]
    if graphs:
        n = max(g.shape[0] for g in graphs)
        # Pad to a common vertex count: isolated trailing vertices.
        graphs = [np.pad(g, (0, n - g.shape[0])) for g in graphs]
    return graphs


def run_experiment(cfg: ExperimentConfig, out=None, timing_out=None) -> list[ExperimentRow]:
    """Run every (grid point, replicate) task and collect rows in order.

    When ``out`` is given rows are streamed to that CSV as they become
    available in order, so a failure leaves every earlier row on disk.
    ``timing_out`` receives ``runtime_ms`` per row in a separate CSV.
    """
    points = grid_points(cfg)
    graphs = _load_graphs(cfg)
    tasks = [(g, r) for g in range(len(points)) for r in range(cfg.replicates)]

    def work(task):
        return _run_task(cfg, points, graphs, *task)

    rows: list[ExperimentRow] = []
    fh = open(out, "w", newline="") if out is not None else None
    try:
        writer = csv.writer(fh, lineterminator="\n") if fh else None
        if writer:
            writer.writerow(ROW_COLUMNS)
            fh.flush()
        pool = ThreadPoolExecutor(cfg.threads) if cfg.threads > 1 else None
        try:
            results = pool.map(work, tasks) if pool else map(work, tasks)
            for task_rows in results:
                for row in task_rows:
                    rows.append(row)
                    if writer:
                        vals = row.values()
                        writer.writerow([format_value(vals[c]) for c in ROW_COLUMNS])
                if fh:
                    fh.flush()
        finally:
            if pool:
                pool.shutdown(wait=True, cancel_futures=True)
    finally:
        if fh:
            fh.close()
    if timing_out is not None:
        with open(timing_out, "w", newline="") as th:
            w = csv.writer(th, lineterminator="\n")
            w.writerow(("grid_index", "replicate", "centering", "runtime_ms"))
            for row in rows:
                w.writerow((row.grid_index, row.replicate, row.centering,
                            format_value(row.runtime_ms)))
    return rows


def summarize(rows, metric: str = "accuracy") -> list[SummaryRow]:
    """Mean, sample sd (``n - 1``; 0 for a single row) and count per group.

    Groups are (experiment, parameter values, centering), in first-seen order.
    """
    rows = list(rows)
    if not rows:
        raise ValueError("cannot summarise an empty table")
    groups: dict = {}
    for row in rows:
        key = (row.experiment, tuple(row.params.get(k) for k in PARAM_COLUMNS), row.centering)
        groups.setdefault(key, []).append(float(getattr(row, metric)))
    out = []
    for (exp, params, centering), vals in groups.items():
        x = np.asarray(vals)
        sd = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
        out.append(SummaryRow(exp, dict(zip(PARAM_COLUMNS, params)), centering, metric,
                              float(x.mean()), sd, int(x.size)))
    return out


def summary_path(out) -> Path:
    p = Path(out)
    return p.with_name(p.stem + "_summary" + (p.suffix or ".csv"))


def timing_path(out) -> Path:
    p = Path(out)
    return p.with_name(p.stem + "_timing" + (p.suffix or ".csv"))
