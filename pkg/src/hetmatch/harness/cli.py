"""Command-line entry point: ``hetmatch {sample,usvt,match,oracle,experiment}``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from ..assignment import Permutation
from ..corr_er import homogeneous_spec, sample_pair
from ..faq import MatchOptions, faq_match
from ..matchability import accuracy, matchability_verdict
from ..usvt import UsvtOptions, center, usvt_estimate
from .config import ConfigError, ExperimentConfig, load_config, parse_value, resolve_config
from .experiments import (hetero_spec, run_experiment, summarize, summary_path, timing_path,
                          write_summary_csv)
from .graphio import load_graph, write_edge_list


def _seed(s: str) -> int:
    v = int(s, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must fit in 64 unsigned bits: {s}")
    return v


def _add_usvt_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rule", choices=("explicit", "scaled", "elbow"), default="scaled")
    p.add_argument("--t", type=float, help="explicit singular value threshold")
    p.add_argument("--a", type=float, default=2.01, help="scale in a*sqrt(n*r_hat)")
    p.add_argument("--rhat", type=float, default=1.0, help="r_hat in a*sqrt(n*r_hat)")
    p.add_argument("--elbows", type=int, default=1)
    p.add_argument("--clip", action=argparse.BooleanOptionalAction, default=None,
                   help="clip the estimate to [0, 1] (default: on unless --weighted)")
    p.add_argument("--keep-diagonal", action="store_true", help="do not zero the diagonal")


def _usvt_from_args(args) -> UsvtOptions:
    clip = (not args.weighted) if args.clip is None else args.clip
    kw = dict(clip_to_unit=clip, hollow_output=not args.keep_diagonal)
    if args.rule == "explicit":
        return UsvtOptions.explicit(args.t, **kw)
    if args.rule == "elbow":
        return UsvtOptions.elbow(args.elbows, **kw)
    return UsvtOptions.scaled(args.a, args.rhat, **kw)


def _load_pair(args):
    a = load_graph(args.graph_a, weighted=args.weighted)
    b = load_graph(args.graph_b, weighted=args.weighted)
    n = max(a.shape[0], b.shape[0])
    return np.pad(a, (0, n - a.shape[0])), np.pad(b, (0, n - b.shape[0]))


def cmd_sample(args) -> int:
    if args.model == "homogeneous":
        spec = homogeneous_spec(args.n, args.p, args.q if args.q is not None else args.p, args.rho)
    else:
        spec = hetero_spec(args.n, args.alpha)
    pair = sample_pair(spec, args.seed)
    out = Path(args.out)
    pa, pb = out.with_name(out.name + "_a.edges"), out.with_name(out.name + "_b.edges")
    write_edge_list(pa, pair.a)
    write_edge_list(pb, pair.b)
    iu = np.triu_indices(spec.n, 1)
    print(f"n={spec.n} edges_a={int(pair.a[iu].sum())} edges_b={int(pair.b[iu].sum())}")
    print(f"wrote {pa} {pb}")
    return 0


def cmd_usvt(args) -> int:
    a = load_graph(args.graph, weighted=args.weighted)
    est = usvt_estimate(a, _usvt_from_args(args))
    print(f"retained_rank={est.retained_rank} threshold={est.threshold_used:.10g}")
    top = ", ".join(f"{s:.6g}" for s in est.singular_values[:10])
    print(f"leading singular values: {top}")
    if args.out:
        np.savetxt(args.out, est.q_hat, delimiter=",", fmt="%.10g")
        print(f"wrote {args.out}")
    return 0


def cmd_match(args) -> int:
    a, b = _load_pair(args)
    if args.centering == "usvt":
        opts = _usvt_from_args(args)
        a = center(a, usvt_estimate(a, opts).q_hat)
        b = center(b, usvt_estimate(b, opts).q_hat)
    init = Permutation.identity(a.shape[0]) if args.init == "identity" else args.init
    res = faq_match(a, b, MatchOptions(max_iters=args.max_iters, rel_tol=args.rel_tol,
                                       init=init, restarts=args.restarts, seed=args.seed,
                                       threads=args.threads))
    print(f"objective={res.objective:.10g} iterations={res.iterations} "
          f"converged={res.converged} accuracy_vs_identity={accuracy(res.permutation):.10g}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("vertex,match\n")
            for i, j in enumerate(res.permutation):
                fh.write(f"{i},{j}\n")
        print(f"wrote {args.out}")
    return 0


def cmd_oracle(args) -> int:
    a, b = _load_pair(args)
    usvt = _usvt_from_args(args) if args.centering == "usvt" else None
    v = matchability_verdict(a, b, f=args.f, n_core=args.n_core, usvt=usvt)
    for arm, argmin in v.argmin_sets.items():
        imgs = "; ".join(" ".join(map(str, p)) for p in argmin[:10])
        more = f" (+{len(argmin) - 10} more)" if len(argmin) > 10 else ""
        print(f"{arm}: objective={v.objectives[arm]:.10g} argmin[{len(argmin)}]={imgs}{more}")
        print(f"  exact={v.verdicts[(arm, 'exact')]} f<={v.f}: {v.verdicts[(arm, 'f')]} "
              f"core({v.n_core}): {v.verdicts[(arm, 'core')]}")
    return 0


def _config_flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def cmd_experiment(args) -> int:
    layers = [load_config(args.config)] if args.config else []
    flags = {}
    for f in fields(ExperimentConfig):
        raw = getattr(args, "cfg_" + f.name, None)
        if raw is not None:
            flags[f.name] = parse_value(f.name, raw)
    layers.append(flags)
    cfg = resolve_config(*layers)
    out = cfg.out or f"{cfg.experiment}.csv"
    timing = timing_path(out) if args.timing else None
    try:
        rows = run_experiment(cfg, out=out, timing_out=timing)
    except Exception:
        print(f"error: experiment failed; completed rows kept in {out}", file=sys.stderr)
        raise
    summ = summarize(rows)
    write_summary_csv(summary_path(out), summ)
    for s in summ:
        params = " ".join(f"{k}={v}" for k, v in s.params.items() if v is not None)
        print(f"{params} centering={s.centering} mean={s.mean:.4f} sd={s.sd:.4f} count={s.count}")
    print(f"wrote {out} and {summary_path(out)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hetmatch",
                                 description="Correlated random graph matching toolkit.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="sample a correlated graph pair to edge lists")
    p.add_argument("--model", choices=("homogeneous", "two_block"), default="homogeneous")
    p.add_argument("--n", type=int, default=100, help="vertices (per block for two_block)")
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--q", type=float)
    p.add_argument("--rho", type=float, default=0.5)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out", default="pair", help="output prefix")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("usvt", help="USVT estimate of one graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--weighted", action="store_true")
    p.add_argument("--out")
    _add_usvt_flags(p)
    p.set_defaults(func=cmd_usvt)

    for name, func, helptext in (("match", cmd_match, "FAQ-match two graphs"),
                                 ("oracle", cmd_oracle, "exhaustive matchability of two small graphs")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--graph-a", required=True)
        p.add_argument("--graph-b", required=True)
        p.add_argument("--weighted", action="store_true")
        p.add_argument("--centering", choices=("none", "usvt"), default="none")
        _add_usvt_flags(p)
        if name == "match":
            p.add_argument("--init", choices=("identity", "barycenter", "random"), default="barycenter")
            p.add_argument("--max-iters", type=int, default=30)
            p.add_argument("--rel-tol", type=float, default=1e-6)
            p.add_argument("--restarts", type=int, default=1)
            p.add_argument("--seed", type=_seed, default=0)
            p.add_argument("--threads", type=int, default=1)
            p.add_argument("--out")
        else:
            p.add_argument("--f", type=int, default=0)
            p.add_argument("--n-core", type=int)
        p.set_defaults(func=func)

    p = sub.add_parser("experiment", help="run a Monte-Carlo experiment grid")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--timing", action="store_true", help="also write per-row runtimes")
    for f in fields(ExperimentConfig):
        p.add_argument(_config_flag(f.name), dest="cfg_" + f.name, metavar="VALUE")
    p.set_defaults(func=cmd_experiment)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
