"""Experiment harness: datasets, training runs, checkpoints, reports.

A run is fully determined by (config, seed): datasets are rebuilt from
``data.seed``, training randomness from ``train.seed``, and evaluation
rollouts from per-instance seeds, so repeated runs write byte-identical
CSV files.

Files written per run directory:
  config.txt           effective configuration (canonical form)
  learning_curve.csv   episode,split,mean_reward,best_so_far
  results.csv          instance_id,split,algorithm,seed,reward,delta_vs_greedy
  checkpoint.npz       best actor parameters plus JSON metadata
"""

from __future__ import annotations

import inspect
import json
import os
import warnings
from dataclasses import dataclass, field

import numpy as np

from .agents import ScoreActor
from .config import config_hash, env_params, learner_kwargs, render_config
from .envs.smsp import SmspInstance
from .learners import BASELINES, LEARNERS, PolicyBaseline
from .models import ModelSpec, ParamSet
from .tasks import SeededInstance, build_task, evaluate_rollout

SPLITS = ("train", "val", "test")

CURVE_HEADER = "episode,split,mean_reward,best_so_far"
RESULTS_HEADER = "instance_id,split,algorithm,seed,reward,delta_vs_greedy"


def fmt(x) -> str:
    """Canonical cell text: shortest exact form for floats."""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path: str, header: str, rows: list[tuple]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(fmt(cell) for cell in row) + "\n")


def build_splits(task, cfg: dict) -> dict:
    return {
        split: task.generate_instances(cfg[f"data.{split}"], split, cfg["data.seed"])
        for split in SPLITS
    }


def make_learner(algo: str, cfg: dict):
    if algo in BASELINES:
        return PolicyBaseline(policy=algo, eval_probe=cfg["eval.probe"])
    cls = LEARNERS[algo]
    accepted = set(inspect.signature(cls.__init__).parameters) - {"self"}
    return cls(**learner_kwargs(cfg, accepted))


# ---------------------------------------------------------------- datasets


DATASET_FORMAT = 1


def save_dataset(path: str, task, cfg: dict, split: str, instances: list) -> None:
    """One JSON-lines file: a meta line, then one record per instance."""
    meta = {
        "format": DATASET_FORMAT,
        "environment": cfg["env.name"],
        "split": split,
        "data_seed": cfg["data.seed"],
        "count": len(instances),
        "env_params": env_params(cfg),
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(meta, sort_keys=True) + "\n")
        for inst in instances:
            if isinstance(inst, SmspInstance):
                rec = {
                    "release": [float(r) for r in inst.release],
                    "processing": [int(p) for p in inst.processing],
                }
            else:
                rec = {"gen_seed": inst.gen_seed, "dyn_seed": inst.dyn_seed}
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def load_dataset(path: str) -> tuple[dict, list]:
    """Read a dataset file back into (meta, instance objects)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line for line in fh.read().splitlines() if line.strip()]
    if not lines:
        raise ValueError(f"dataset file {path} is empty")
    meta = json.loads(lines[0])
    if meta.get("format") != DATASET_FORMAT:
        raise ValueError(
            f"dataset file {path}: format {meta.get('format')!r}, "
            f"expected {DATASET_FORMAT}"
        )
    instances = []
    for line in lines[1:]:
        rec = json.loads(line)
        if meta["environment"] == "smsp":
            instances.append(
                SmspInstance(
                    release=np.array(rec["release"], dtype=np.float64),
                    processing=np.array(rec["processing"], dtype=np.int64),
                )
            )
        else:
            instances.append(SeededInstance(rec["gen_seed"], rec["dyn_seed"]))
    if len(instances) != meta["count"]:
        raise ValueError(
            f"dataset file {path}: meta says {meta['count']} records, found {len(instances)}"
        )
    return meta, instances


def generate_datasets(cfg: dict, out_dir: str) -> list[str]:
    """Write one dataset file per split; returns the paths."""
    task = build_task(cfg["env.name"], cfg["data.seed"], env_params(cfg))
    splits = build_splits(task, cfg)
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for split in SPLITS:
        path = os.path.join(out_dir, f"{cfg['env.name']}_{split}.jsonl")
        save_dataset(path, task, cfg, split, splits[split])
        paths.append(path)
    return paths


# -------------------------------------------------------------- checkpoints


def save_checkpoint(path: str, learner, cfg: dict) -> None:
    spec = learner.actor_.spec
    meta = {
        "environment": cfg["env.name"],
        "algorithm": cfg["train.algo"],
        "seed": cfg["train.seed"],
        "config_hash": config_hash(cfg),
        "best_episode": learner.best_episode_,
        "spec": {
            "kind": spec.kind,
            "in_dim": spec.in_dim,
            "out_dim": spec.out_dim,
            "hidden_dim": spec.hidden_dim,
            "activation": spec.activation,
        },
    }
    p = learner.params_
    np.savez(
        path,
        values=p.values,
        adam_m=p.m,
        adam_v=p.v,
        step=np.array(p.step),
        meta=np.array(json.dumps(meta, sort_keys=True)),
    )


def load_checkpoint(path: str, task, cfg: dict | None = None) -> tuple[ParamSet, dict]:
    """Restore actor parameters, validated against the task's model shape."""
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        params = ParamSet(
            values=np.array(data["values"]),
            m=np.array(data["adam_m"]),
            v=np.array(data["adam_v"]),
            step=int(data["step"]),
        )
    spec = ModelSpec(**meta["spec"])
    if spec != task.actor_spec:
        raise ValueError(
            f"checkpoint model {spec} does not match task model {task.actor_spec}"
        )
    if params.values.shape[0] != spec.n_params:
        raise ValueError(
            f"checkpoint has {params.values.shape[0]} parameters, expected {spec.n_params}"
        )
    if cfg is not None and meta["config_hash"] != config_hash(cfg):
        warnings.warn(
            "checkpoint was written under a different configuration", stacklevel=2
        )
    return params, meta


# ------------------------------------------------------------------- runs


@dataclass
class RunReport:
    """Everything a caller needs to inspect a finished run."""

    environment: str
    algorithm: str
    seed: int
    config_hash: str
    best_episode: int
    split_means: dict = field(default_factory=dict)
    result_rows: list = field(default_factory=list)
    curve_rows: list = field(default_factory=list)
    out_dir: str | None = None


def curve_rows_from_history(history: list[dict]) -> list[tuple]:
    rows = []
    best = {}
    for record in history:
        for split, key in (("train", "train_mean"), ("val", "val_mean")):
            value = record[key]
            if value is None:
                continue
            best[split] = value if split not in best else max(best[split], value)
            rows.append((record["episode"], split, value, best[split]))
    return rows


def final_result_rows(task, learner, splits: dict, algo: str, seed: int) -> list[tuple]:
    rows = []
    for split in SPLITS:
        for i, inst in enumerate(splits[split]):
            reward = evaluate_rollout(task, learner.predict, inst)
            greedy = evaluate_rollout(task, task.greedy, inst)
            rows.append((i, split, algo, seed, reward, reward - greedy))
    return rows


def run_training(cfg: dict, seed: int | None = None, out_dir: str | None = None) -> RunReport:
    """Train one (config, seed) pair and optionally write its run files."""
    cfg = dict(cfg)
    if seed is not None:
        cfg["train.seed"] = int(seed)
    task = build_task(cfg["env.name"], cfg["data.seed"], env_params(cfg))
    splits = build_splits(task, cfg)
    algo = cfg["train.algo"]
    learner = make_learner(algo, cfg)
    learner.fit(task, splits["train"], splits["val"])
    result_rows = final_result_rows(task, learner, splits, algo, cfg["train.seed"])
    curve_rows = curve_rows_from_history(learner.history_)
    split_means = {
        split: float(np.mean([r[4] for r in result_rows if r[1] == split]))
        for split in SPLITS
        if splits[split]
    }
    report = RunReport(
        environment=cfg["env.name"],
        algorithm=algo,
        seed=cfg["train.seed"],
        config_hash=config_hash(cfg),
        best_episode=learner.best_episode_,
        split_means=split_means,
        result_rows=result_rows,
        curve_rows=curve_rows,
        out_dir=out_dir,
    )
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "config.txt"), "w", encoding="utf-8") as fh:
            fh.write(render_config(cfg))
        write_csv(os.path.join(out_dir, "learning_curve.csv"), CURVE_HEADER, curve_rows)
        write_csv(os.path.join(out_dir, "results.csv"), RESULTS_HEADER, result_rows)
        if algo not in BASELINES:
            save_checkpoint(os.path.join(out_dir, "checkpoint.npz"), learner, cfg)
    return report


def run_evaluation(cfg: dict, run_dir: str, out_path: str | None = None) -> list[tuple]:
    """Re-evaluate a saved checkpoint on the configured test split."""
    task = build_task(cfg["env.name"], cfg["data.seed"], env_params(cfg))
    splits = build_splits(task, cfg)
    algo = cfg["train.algo"]
    if algo in BASELINES:
        policy = task.expert if algo == "expert" else task.greedy
        seed = cfg["train.seed"]
    else:
        params, meta = load_checkpoint(os.path.join(run_dir, "checkpoint.npz"), task, cfg)
        actor = ScoreActor(spec=task.actor_spec, observe_fn=task.observe, layer_fn=task.layer)
        policy = lambda state: actor.action(params, state)
        seed = meta["seed"]
    rows = []
    for i, inst in enumerate(splits["test"]):
        reward = evaluate_rollout(task, policy, inst)
        greedy = evaluate_rollout(task, task.greedy, inst)
        rows.append((i, "test", algo, seed, reward, reward - greedy))
    if out_path is not None:
        write_csv(out_path, RESULTS_HEADER, rows)
    return rows


def collect_report(root: str) -> list[tuple]:
    """Aggregate every results.csv under ``root`` into summary rows."""
    summaries = []
    for dirpath, _, filenames in sorted(os.walk(root)):
        if "results.csv" not in filenames:
            continue
        path = os.path.join(dirpath, "results.csv")
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
        if not lines or lines[0] != RESULTS_HEADER:
            raise ValueError(f"{path} is not a results file")
        groups: dict[tuple, list] = {}
        for line in lines[1:]:
            cells = line.split(",")
            key = (cells[2], cells[3], cells[1])  # algorithm, seed, split
            groups.setdefault(key, []).append((float(cells[4]), float(cells[5])))
        rel = os.path.relpath(dirpath, root)
        for (algo, seed, split), vals in sorted(groups.items()):
            rewards = [v[0] for v in vals]
            deltas = [v[1] for v in vals]
            summaries.append(
                (rel, algo, seed, split, len(vals),
                 float(np.mean(rewards)), float(np.mean(deltas)))
            )
    return summaries
