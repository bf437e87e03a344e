"""Flat text configuration for experiment runs.

The format is one ``key = value`` pair per line with ``#`` comments.
Keys are dotted and must exist in the registry below; unknown keys are
rejected so typos fail loudly instead of silently using a default.
Schedule-valued keys accept either a single number or a linear ramp
written ``start -> end``.
"""

from __future__ import annotations

import hashlib

ENVIRONMENTS = ("smsp", "dap", "gspp")
ALGORITHMS = ("srl", "sil", "ppo", "greedy", "expert")

# key -> (type tag, default). Type tags: int, float, str, sched.
REGISTRY = {
    "env.name": ("str", "smsp"),
    "env.n_jobs": ("int", 8),
    "env.n_items": ("int", 20),
    "env.k_select": ("int", 4),
    "env.episode_len": ("int", 80),
    "env.rows": ("int", 20),
    "env.cols": ("int", 20),
    "env.factor_scale": ("float", 0.005),
    "data.seed": ("int", 0),
    "data.train": ("int", 120),
    "data.val": ("int", 40),
    "data.test": ("int", 40),
    "train.algo": ("str", "srl"),
    "train.seed": ("int", 0),
    "train.episodes": ("int", 200),
    "train.iterations": ("int", 10),
    "train.batch_size": ("int", 4),
    "train.gamma": ("float", 0.99),
    "train.lr_actor": ("sched", 1e-3),
    "train.lr_critic": ("sched", 1e-3),
    "train.sigma_f": ("sched", 0.25),
    "train.sigma_b": ("sched", 0.25),
    "train.tau": ("sched", 1.0),
    "train.eps": ("float", 0.25),
    "train.clip": ("float", 0.2),
    "train.m_candidates": ("int", 16),
    "train.fy_samples": ("int", 10),
    "train.replay_capacity": ("int", 2000),
    "train.warmup_episodes": ("int", 0),
    "eval.every": ("int", 1),
    "eval.probe": ("int", 0),
}

# Config keys forwarded to learner constructors, by constructor argument.
LEARNER_KEYS = {
    "episodes": "train.episodes",
    "iterations": "train.iterations",
    "batch_size": "train.batch_size",
    "gamma": "train.gamma",
    "lr_actor": "train.lr_actor",
    "lr_critic": "train.lr_critic",
    "sigma_f": "train.sigma_f",
    "sigma_b": "train.sigma_b",
    "tau": "train.tau",
    "eps": "train.eps",
    "clip": "train.clip",
    "m_candidates": "train.m_candidates",
    "fy_samples": "train.fy_samples",
    "replay_capacity": "train.replay_capacity",
    "warmup_episodes": "train.warmup_episodes",
    "eval_every": "eval.every",
    "eval_probe": "eval.probe",
    "seed": "train.seed",
}


def _parse_value(key: str, raw: str):
    kind = REGISTRY[key][0]
    raw = raw.strip()
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "str":
            return raw
        if kind == "sched":
            if "->" in raw:
                start, end = raw.split("->", 1)
                return (float(start), float(end))
            return float(raw)
    except ValueError:
        raise ValueError(f"config key {key!r}: cannot parse {raw!r} as {kind}") from None
    raise AssertionError(f"unhandled type tag {kind}")


def parse_config(text: str) -> dict:
    """Parse config text into a complete key -> value dict with defaults."""
    cfg = {key: default for key, (_, default) in REGISTRY.items()}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {line!r}")
        key, raw = line.split("=", 1)
        key = key.strip()
        if key not in REGISTRY:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        cfg[key] = _parse_value(key, raw)
    if cfg["env.name"] not in ENVIRONMENTS:
        raise ValueError(f"env.name must be one of {ENVIRONMENTS}, got {cfg['env.name']!r}")
    if cfg["train.algo"] not in ALGORITHMS:
        raise ValueError(f"train.algo must be one of {ALGORITHMS}, got {cfg['train.algo']!r}")
    return cfg


def load_config(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def _render_value(value) -> str:
    if isinstance(value, tuple):
        return f"{value[0]!r} -> {value[1]!r}"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_config(cfg: dict) -> str:
    """Canonical sorted text form; parses back to an equal dict."""
    lines = [f"{key} = {_render_value(cfg[key])}" for key in sorted(cfg)]
    return "\n".join(lines) + "\n"


def config_hash(cfg: dict) -> str:
    """Short stable digest of the effective configuration."""
    return hashlib.sha256(render_config(cfg).encode("utf-8")).hexdigest()[:16]


def env_params(cfg: dict) -> dict:
    """The env.* entries relevant to the configured environment."""
    name = cfg["env.name"]
    keys = {
        "smsp": ("n_jobs",),
        "dap": ("n_items", "k_select", "episode_len"),
        "gspp": ("rows", "cols", "episode_len", "factor_scale"),
    }[name]
    return {k: cfg[f"env.{k}"] for k in keys}


def learner_kwargs(cfg: dict, accepted: set) -> dict:
    """Config values for the constructor arguments a learner accepts."""
    return {
        arg: cfg[key] for arg, key in LEARNER_KEYS.items() if arg in accepted
    }
