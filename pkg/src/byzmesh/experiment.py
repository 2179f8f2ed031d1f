"""Config-driven experiment grids.

A YAML config names a graph, a weight rule, sweep lists of aggregators
and attacks, a problem, and run parameters; every (aggregator, attack,
seed) triple becomes one independent deterministic run.  Outputs: one
CSV trace per run, a summary (mean final accuracy and disagreement over
seeds) as CSV and JSON, and a manifest echoing the resolved config.
"""
from __future__ import annotations

import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .aggregators import AggregationError, AggregatorSpec, parse_aggregator
from .attacks import AttackError, AttackSpec, parse_attack
from .graphs import (
    WEIGHT_RULES,
    GraphError,
    MixingMatrix,
    Topology,
    gen_erdos_renyi,
    gen_octopus,
    gen_two_castle,
)
from .problems import (
    ProblemError,
    QuadraticProblem,
    SoftmaxProblem,
    load_mnist,
    mnist_dir,
    partition,
    synthetic_clusters,
)
from .rng import DOMAIN_PARTITION, stream
from .trainer import (
    RunConfig,
    StepSchedule,
    TrainerError,
    disagreement,
    parse_schedule,
    run,
    write_trace,
)


class ConfigError(ValueError):
    """Invalid experiment config; message names the offending field."""


def _parse_kv(text: str, int_keys: set[str], field_name: str) -> tuple[str, dict]:
    head, _, rest = text.strip().partition(":")
    params: dict = {}
    if rest:
        for item in rest.split(","):
            key, sep, value = item.partition("=")
            if not sep:
                raise ConfigError(f"{field_name}: malformed parameter {item!r}")
            key = key.strip().lower()
            try:
                if "+" in value:
                    params[key] = [int(v) for v in value.split("+")]
                elif key in int_keys:
                    params[key] = int(value)
                else:
                    params[key] = float(value)
            except ValueError as exc:
                raise ConfigError(f"{field_name}: bad value {value!r} for {key!r}") from exc
    return head.strip().lower(), params


def parse_graph(text: str) -> Topology:
    """"two_castle:c=5,byz=1", "erdos:n=10,b=2,p=0.7,seed=1",
    "octopus:head=8,legs=4,len=1,byz=0+4"."""
    kind, p = _parse_kv(text, {"c", "byz", "n", "b", "seed", "head", "legs", "len"}, "graph")
    try:
        if kind in ("two_castle", "twocastle"):
            return gen_two_castle(int(p.get("c", 5)), int(p.get("byz", 0)))
        if kind in ("erdos", "erdos_renyi", "er"):
            return gen_erdos_renyi(
                int(p.get("n", 10)), int(p.get("b", 0)), float(p.get("p", 0.7)), int(p.get("seed", 0))
            )
        if kind == "octopus":
            byz = p.get("byz", [])
            if isinstance(byz, (int, float)):
                byz = [int(byz)]
            return gen_octopus(int(p.get("head", 8)), int(p.get("legs", 0)), int(p.get("len", 1)), byz)
    except GraphError as exc:
        raise ConfigError(f"graph: {exc}") from exc
    raise ConfigError(f"graph: unknown kind {kind!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    topology: Topology
    mixing: MixingMatrix
    weight_rule: str
    aggregators: tuple[AggregatorSpec, ...]
    attacks: tuple[AttackSpec, ...]
    problem: QuadraticProblem | SoftmaxProblem
    problem_label: str
    partition_mode: str
    steps: int
    schedule: StepSchedule
    batch: int
    seeds: tuple[int, ...]
    metrics_every: int
    out_dir: Path
    x0: np.ndarray | None = field(default=None, repr=False)
    threads: int = 1

    def runs(self):
        for agg in self.aggregators:
            for attack in self.attacks:
                for seed in self.seeds:
                    yield agg, attack, seed


def _build_problem(label: str, raw: dict, topology: Topology) -> tuple:
    kind, p = _parse_kv(label, {"d", "classes", "features", "per_class", "seed"}, "problem")
    n = topology.n_honest
    mode = str(raw.get("partition", "iid"))
    if mode not in ("iid", "label_separated"):
        raise ConfigError(f"partition: unknown mode {mode!r}")
    if kind == "quadratic":
        dim = int(p.get("d", 8))
        spread = float(p.get("spread", 0.25))
        noise = float(p.get("noise", 0.0))
        seed = int(p.get("seed", 0))
        rng = stream(seed, DOMAIN_PARTITION, 3)
        targets = 1.5 + spread * (2.0 * rng.uniform(size=(n, dim)) - 1.0)
        return QuadraticProblem(targets=targets, noise_std=noise), mode
    if kind == "synth":
        classes = int(p.get("classes", 10))
        features = int(p.get("features", 16))
        per_class = int(p.get("per_class", 100))
        spread = float(p.get("spread", 0.35))
        seed = int(p.get("seed", 0))
        feats, labels = synthetic_clusters(classes, features, per_class, spread, seed)
        eval_x, eval_y = synthetic_clusters(
            classes, features, max(per_class // 4, 1), spread, seed, fold=1
        )
        shards = partition(feats, labels, n, mode=mode, seed=seed)
        return SoftmaxProblem(shards=tuple(shards), n_classes=classes, eval_data=(eval_x, eval_y)), mode
    if kind == "mnist":
        data_dir = raw.get("data_dir") or mnist_dir()
        if data_dir is None:
            raise ConfigError("problem: mnist needs data_dir or BYZMESH_DATA_DIR")
        try:
            tr_x, tr_y, te_x, te_y = load_mnist(data_dir)
        except ProblemError as exc:
            raise ConfigError(f"problem: {exc}") from exc
        shards = partition(tr_x, tr_y, n, mode=mode, seed=int(p.get("seed", 0)))
        return SoftmaxProblem(shards=tuple(shards), n_classes=10, eval_data=(te_x, te_y)), mode
    raise ConfigError(f"problem: unknown kind {kind!r}")


def load_config(path: str | Path, overrides: dict | None = None) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a key-value document")
    raw = dict(raw)
    raw.update(overrides or {})

    topology = parse_graph(str(raw.get("graph", "erdos:n=10,b=2,p=0.7,seed=1")))
    weight_rule = str(raw.get("weights", "metropolis")).lower()
    if weight_rule not in WEIGHT_RULES:
        raise ConfigError(f"weights: unknown rule {weight_rule!r} (choices: {sorted(WEIGHT_RULES)})")
    mixing = WEIGHT_RULES[weight_rule](topology)

    agg_list = raw.get("aggregators", [])
    if isinstance(agg_list, str):
        agg_list = [a for a in agg_list.split() if a]
    if not agg_list:
        raise ConfigError("aggregators: list must be non-empty")
    try:
        aggregators = tuple(parse_aggregator(str(a)) for a in agg_list)
    except AggregationError as exc:
        raise ConfigError(f"aggregators: {exc}") from exc

    attack_list = raw.get("attacks", ["none"])
    if isinstance(attack_list, str):
        attack_list = [a for a in attack_list.split() if a]
    if not attack_list:
        raise ConfigError("attacks: list must be non-empty")
    try:
        attacks = tuple(parse_attack(str(a)) for a in attack_list)
    except AttackError as exc:
        raise ConfigError(f"attacks: {exc}") from exc

    problem_label = str(raw.get("problem", "quadratic"))
    problem, mode = _build_problem(problem_label, raw, topology)

    seeds = raw.get("seeds", [1])
    if isinstance(seeds, str):
        seeds = [s for s in re.split(r"[,\s]+", seeds) if s]
    try:
        seeds = tuple(int(s) for s in seeds)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"seeds: {exc}") from exc
    if not seeds:
        raise ConfigError("seeds: list must be non-empty")

    try:
        schedule = parse_schedule(str(raw.get("schedule", "sqrt:0.9")))
    except TrainerError as exc:
        raise ConfigError(f"schedule: {exc}") from exc

    steps = int(raw.get("steps", 1000))
    if steps < 1:
        raise ConfigError("steps: must be >= 1")
    metrics_every = int(raw.get("metrics_every", 1 if isinstance(problem, QuadraticProblem) else 50))
    if metrics_every < 1:
        raise ConfigError("metrics_every: must be >= 1")

    return ExperimentConfig(
        topology=topology,
        mixing=mixing,
        weight_rule=weight_rule,
        aggregators=aggregators,
        attacks=attacks,
        problem=problem,
        problem_label=problem_label,
        partition_mode=mode,
        steps=steps,
        schedule=schedule,
        batch=int(raw.get("batch", 32)),
        seeds=seeds,
        metrics_every=metrics_every,
        out_dir=Path(raw.get("out", "results")),
        threads=max(1, int(raw.get("threads", 1))),
    )


def _slug(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9.+-]+", "-", label)


def trace_filename(agg: AggregatorSpec, attack: AttackSpec, seed: int) -> str:
    return f"trace_{_slug(agg.label())}_{_slug(attack.label())}_s{seed}.csv"


def _atomic_json(path: Path, doc) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    tmp.replace(path)


def manifest_doc(cfg: ExperimentConfig) -> dict:
    return {
        "graph": {
            "n_honest": cfg.topology.n_honest,
            "n_byzantine": cfg.topology.n_byzantine,
            "edges": [list(e) for e in cfg.topology.edges()],
        },
        "weights": cfg.weight_rule,
        "aggregators": [a.label() for a in cfg.aggregators],
        "attacks": [a.label() for a in cfg.attacks],
        "problem": cfg.problem_label,
        "partition": cfg.partition_mode,
        "steps": cfg.steps,
        "schedule": cfg.schedule.label(),
        "batch": cfg.batch,
        "seeds": list(cfg.seeds),
        "metrics_every": cfg.metrics_every,
        "traces": [
            trace_filename(agg, attack, seed) for agg, attack, seed in cfg.runs()
        ],
    }


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Execute the grid; returns the summary document."""
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    _atomic_json(out / "manifest.json", manifest_doc(cfg))

    def one(task):
        agg, attack, seed = task
        rc = RunConfig(
            topology=cfg.topology,
            mixing=cfg.mixing,
            aggregator=agg,
            attack=attack,
            problem=cfg.problem,
            schedule=cfg.schedule,
            steps=cfg.steps,
            batch=cfg.batch,
            x0=cfg.x0,
            seed=seed,
            metrics_every=cfg.metrics_every,
        )
        try:
            result = run(rc)
        except TrainerError as exc:
            raise TrainerError(
                f"run ({agg.label()}, {attack.label()}, seed {seed}) failed: {exc}"
            ) from exc
        write_trace(result, out / trace_filename(agg, attack, seed))
        return task, result

    tasks = list(cfg.runs())
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = dict(pool.map(one, tasks))
    else:
        results = dict(one(t) for t in tasks)

    summary_rows = []
    for agg in cfg.aggregators:
        for attack in cfg.attacks:
            accs, dms, losses = [], [], []
            for seed in cfg.seeds:
                res = results[(agg, attack, seed)]
                dms.append(disagreement(res.final_models))
                losses.append(res.records[-1].loss)
                if res.records[-1].accuracy is not None:
                    accs.append(res.records[-1].accuracy)
            summary_rows.append(
                {
                    "aggregator": agg.label(),
                    "attack": attack.label(),
                    "accuracy": float(np.mean(accs)) if accs else None,
                    "dm": float(np.mean(dms)),
                    "loss": float(np.mean(losses)),
                    "seeds": len(cfg.seeds),
                }
            )

    summary = {"rows": summary_rows}
    _atomic_json(out / "summary.json", summary)
    lines = ["aggregator,attack,accuracy,dm,loss,seeds"]
    for r in summary_rows:
        acc = "" if r["accuracy"] is None else format(r["accuracy"], ".17g")
        lines.append(
            f"{r['aggregator']},{r['attack']},{acc},{format(r['dm'], '.17g')},"
            f"{format(r['loss'], '.17g')},{r['seeds']}"
        )
    tmp = out / "summary.csv.tmp"
    tmp.write_text("\n".join(lines) + "\n")
    tmp.replace(out / "summary.csv")
    return summary
