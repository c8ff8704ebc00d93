"""Experiment configuration: flat ``key = value`` files and per-experiment defaults."""

from __future__ import annotations

from dataclasses import dataclass, field, fields

__all__ = ["EXPERIMENTS", "CENTERINGS", "ConfigError", "ExperimentConfig",
           "parse_config_text", "load_config", "resolve_config"]

EXPERIMENTS = ("center_cost", "figure1_alpha_sweep", "figure2_n_sweep",
               "core_junk", "noise_injection", "pairwise_matrix")
CENTERINGS = ("none", "oracle", "usvt")
INITS = ("identity", "block_swap", "barycenter", "random")


class ConfigError(ValueError):
    pass


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _list(conv):
    def parse(s: str):
        items = [x.strip() for x in s.split(",") if x.strip()]
        return [conv(x) for x in items]
    return parse


def _optional(conv):
    def parse(s: str):
        return None if s.strip().lower() in ("", "none", "auto") else conv(s)
    return parse


# ``None`` list fields mean "use the experiment default".
@dataclass
class ExperimentConfig:
    experiment: str = "figure1_alpha_sweep"
    n: list | None = None
    alpha: list | None = None
    p: list | None = None
    rho: list | None = None
    n_core: int | None = None
    n_junk: list | None = None
    core_cov: float = 0.04
    core_rho: float | None = None
    noise_q: list | None = None
    noise_size: int = 100
    graphs: list = field(default_factory=list)
    weighted: bool | None = None
    centering: list | None = None
    inits: list | None = None
    usvt_rule: str | None = None
    usvt_a: float | None = None
    usvt_rhat: float | None = None
    usvt_rhat_mode: str = "variance"
    usvt_t: float | None = None
    usvt_elbows: int = 1
    usvt_hollow: bool | None = None
    usvt_clip: bool | None = None
    max_iters: int = 30
    rel_tol: float = 1e-6
    restarts: int = 1
    replicates: int = 20
    seed: int = 0
    threads: int = 1
    out: str | None = None


_PARSERS = {
    "experiment": str.strip,
    "n": _list(int),
    "alpha": _list(float),
    "p": _list(float),
    "rho": _list(float),
    "n_core": _optional(int),
    "n_junk": _list(int),
    "core_cov": float,
    "core_rho": _optional(float),
    "noise_q": _list(float),
    "noise_size": int,
    "graphs": _list(str),
    "weighted": _optional(_bool),
    "centering": _list(str),
    "inits": _list(str),
    "usvt_rule": _optional(str.strip),
    "usvt_a": _optional(float),
    "usvt_rhat": _optional(float),
    "usvt_rhat_mode": str.strip,
    "usvt_t": _optional(float),
    "usvt_elbows": int,
    "usvt_hollow": _optional(_bool),
    "usvt_clip": _optional(_bool),
    "max_iters": int,
    "rel_tol": float,
    "restarts": int,
    "replicates": int,
    "seed": int,
    "threads": int,
    "out": _optional(str.strip),
}
assert set(_PARSERS) == {f.name for f in fields(ExperimentConfig)}


def parse_value(key: str, raw: str):
    if key not in _PARSERS:
        raise ConfigError(f"unknown config key {key!r}")
    try:
        return _PARSERS[key](raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {exc}") from None


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse ``key = value`` lines into a dict of typed values."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        try:
            values[key] = parse_value(key, val)
        except ConfigError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc}") from None
    return values


def load_config(path) -> dict:
    with open(path) as fh:
        return parse_config_text(fh.read(), str(path))


_DEFAULTS = {
    "center_cost": dict(n=[100], p=[0.1, 0.3, 0.5], rho=[0.1, 0.3, 0.5, 0.7, 0.9],
                        centering=["none", "usvt"], inits=["identity"]),
    "figure1_alpha_sweep": dict(n=[150], alpha=[0.75, 0.85, 0.95, 1.0],
                                centering=["none", "oracle", "usvt"],
                                inits=["identity", "block_swap"]),
    "figure2_n_sweep": dict(n=[25, 50, 100, 150], alpha=[1.0],
                            centering=["none", "oracle", "usvt"],
                            inits=["identity", "block_swap"]),
    "core_junk": dict(n_core=60, n_junk=[15, 30, 60],
                      centering=["none", "oracle", "usvt"], inits=["identity"]),
    "noise_injection": dict(n=[200], p=[0.1], rho=[0.7],
                            noise_q=[0.1, 0.3, 0.5, 0.7, 0.9],
                            centering=["none", "usvt"], inits=["identity"],
                            usvt_rule="scaled", usvt_a=2.0, usvt_rhat=1.0,
                            usvt_hollow=False),
    "pairwise_matrix": dict(centering=["none", "usvt"], inits=["identity"],
                            weighted=True, usvt_rule="elbow", replicates=1),
}

_COMMON = dict(weighted=False, usvt_rule="scaled", usvt_a=2.01, usvt_hollow=True)


def resolve_config(*layers: dict) -> ExperimentConfig:
    """Merge value layers (later wins), fill experiment defaults, validate."""
    merged: dict = {}
    for layer in layers:
        merged.update({k: v for k, v in layer.items() if v is not None})
    cfg = ExperimentConfig(**merged)
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {cfg.experiment!r}; choose from {EXPERIMENTS}")
    defaults = {**_COMMON, **_DEFAULTS[cfg.experiment]}
    for key, val in defaults.items():
        if key not in merged:
            setattr(cfg, key, list(val) if isinstance(val, list) else val)
    if cfg.usvt_clip is None:
        # Clipping to [0, 1] only makes sense for 0/1 graphs.
        cfg.usvt_clip = not cfg.weighted
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    def nonempty(name):
        v = getattr(cfg, name)
        if v is not None and len(v) == 0:
            raise ConfigError(f"{name} grid must be nonempty")
    for name in ("n", "alpha", "p", "rho", "n_junk", "noise_q", "centering", "inits"):
        nonempty(name)
    if cfg.replicates < 1:
        raise ConfigError(f"replicates must be >= 1, got {cfg.replicates}")
    if cfg.threads < 1:
        raise ConfigError(f"threads must be >= 1, got {cfg.threads}")
    if cfg.seed < 0 or cfg.seed >= 2 ** 64:
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {cfg.seed}")
    bad = [c for c in cfg.centering if c not in CENTERINGS]
    if bad:
        raise ConfigError(f"unknown centering {bad}; choose from {CENTERINGS}")
    bad = [i for i in cfg.inits if i not in INITS]
    if bad:
        raise ConfigError(f"unknown init {bad}; choose from {INITS}")
    if cfg.usvt_rule not in ("explicit", "scaled", "elbow"):
        raise ConfigError(f"unknown usvt_rule {cfg.usvt_rule!r}")
    if cfg.usvt_rule == "explicit" and cfg.usvt_t is None:
        raise ConfigError("usvt_rule = explicit needs usvt_t")
    if cfg.usvt_rhat_mode not in ("variance", "max"):
        raise ConfigError(f"usvt_rhat_mode must be 'variance' or 'max', got {cfg.usvt_rhat_mode!r}")
    if cfg.experiment == "pairwise_matrix" and len(cfg.graphs) < 2:
        raise ConfigError("pairwise_matrix needs at least two graph files")
    if cfg.experiment == "noise_injection" and len(cfg.graphs) not in (0, 2):
        raise ConfigError("noise_injection takes either no graphs (sampled base) or exactly two")
    if cfg.experiment == "core_junk" and (cfg.n_core is None or cfg.n_core < 2):
        raise ConfigError("core_junk needs n_core >= 2")
    if "oracle" in cfg.centering and cfg.experiment in ("pairwise_matrix", "noise_injection"):
        raise ConfigError(f"oracle centering needs a known model; not available for {cfg.experiment}")
